#include "cranimem/structured.hpp"

#include <algorithm>
#include <set>

#include <spdlog/spdlog.h>

#include "cranimem/errors.hpp"

namespace cranimem {

namespace {

using nlohmann::json;

enum class FieldType { Bool, Integer, Number, String, StringList, ObjectList };

struct Field {
  const char* name;
  FieldType type;
  bool required;
};

const std::vector<Field>& fields_for(SchemaKind kind) {
  static const std::vector<Field> gating = {
      {"is_noise", FieldType::Bool, true},
      {"priority_score", FieldType::Integer, true},
      {"entities", FieldType::StringList, false},
      {"reasoning", FieldType::String, false},
  };
  static const std::vector<Field> utility = {
      {"importance", FieldType::Number, true},
      {"surprise", FieldType::Number, true},
      {"emotion", FieldType::Number, true},
      {"entities", FieldType::StringList, false},
  };
  static const std::vector<Field> cortex = {
      {"is_noise", FieldType::Bool, true},
      {"category", FieldType::String, true},
      {"importance", FieldType::Number, true},
      {"surprise", FieldType::Number, true},
      {"emotion", FieldType::Number, true},
      {"entities", FieldType::StringList, false},
      {"reason", FieldType::String, false},
  };
  static const std::vector<Field> extraction = {
      {"entities", FieldType::ObjectList, true},
      {"relations", FieldType::ObjectList, true},
  };
  switch (kind) {
    case SchemaKind::Gating: return gating;
    case SchemaKind::Utility: return utility;
    case SchemaKind::Cortex: return cortex;
    case SchemaKind::Extraction: return extraction;
  }
  return utility;
}

bool has_type(const json& v, FieldType t) {
  switch (t) {
    case FieldType::Bool: return v.is_boolean();
    case FieldType::Integer:
      return v.is_number_integer() ||
             (v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<long long>(v.get<double>())));
    case FieldType::Number: return v.is_number();
    case FieldType::String: return v.is_string();
    case FieldType::StringList:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); });
    case FieldType::ObjectList:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_object(); });
  }
  return false;
}

std::string field_string(const json& obj, const char* key, const std::string& raw) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(std::string("extraction record missing string field '") + key + "'", raw);
  }
  return it->get<std::string>();
}

std::vector<std::string> string_list(const json& obj, const char* key) {
  if (!obj.contains(key)) return {};
  return obj.at(key).get<std::vector<std::string>>();
}

}  // namespace

const char* to_string(SchemaKind kind) {
  switch (kind) {
    case SchemaKind::Gating: return "gating";
    case SchemaKind::Utility: return "utility";
    case SchemaKind::Cortex: return "cortex";
    case SchemaKind::Extraction: return "extraction";
  }
  return "unknown";
}

std::optional<std::string> repair_json_text(std::string_view raw) {
  auto first = raw.find('{');
  auto last = raw.rfind('}');
  if (first == std::string_view::npos || last == std::string_view::npos || last < first) {
    return std::nullopt;
  }
  // Fences sit outside the outermost braces, so slicing removes them too.
  return std::string(raw.substr(first, last - first + 1));
}

ParsedStructure parse_structured(std::string_view raw, SchemaKind kind) {
  const std::string raw_s(raw);
  auto repaired = repair_json_text(raw);
  if (!repaired) throw ParseError(std::string("no JSON object in ") + to_string(kind) + " output", raw_s);

  json value = json::parse(*repaired, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded() || !value.is_object()) {
    throw ParseError(std::string("malformed JSON in ") + to_string(kind) + " output", raw_s);
  }

  ParsedStructure out;
  const auto& fields = fields_for(kind);
  std::set<std::string> known;
  for (const auto& f : fields) {
    known.insert(f.name);
    auto it = value.find(f.name);
    if (it == value.end() || it->is_null()) {
      if (f.required) {
        throw ParseError(std::string("missing required field '") + f.name + "' in " +
                             to_string(kind) + " output",
                         raw_s);
      }
      continue;
    }
    if (!has_type(*it, f.type)) {
      throw ParseError(std::string("field '") + f.name + "' has the wrong type", raw_s);
    }
  }
  for (auto it = value.begin(); it != value.end(); ++it) {
    if (!known.count(it.key())) {
      out.warnings.push_back("ignored unknown field '" + it.key() + "'");
      spdlog::warn("{} output: ignored unknown field '{}'", to_string(kind), it.key());
    }
  }
  out.value = std::move(value);
  return out;
}

double clamp_score(double v, const char* field, std::vector<std::string>& warnings) {
  if (v >= 0.0 && v <= 1.0) return v;
  double c = v < 0.0 ? 0.0 : 1.0;
  if (v != v) c = 0.0;
  warnings.push_back(std::string("clamped ") + field + " " + std::to_string(v) + " into [0,1]");
  spdlog::warn("clamped {} {} into [0,1]", field, v);
  return c;
}

GatingOutput parse_gating(std::string_view raw) {
  auto p = parse_structured(raw, SchemaKind::Gating);
  const auto& v = p.value;
  GatingOutput out;
  out.is_noise = v.at("is_noise").get<bool>();
  out.priority_score = static_cast<int>(v.at("priority_score").get<double>());
  out.entities = string_list(v, "entities");
  out.reasoning = v.value("reasoning", std::string());
  return out;
}

UtilityOutput parse_utility(std::string_view raw) {
  auto p = parse_structured(raw, SchemaKind::Utility);
  const auto& v = p.value;
  UtilityOutput out;
  out.warnings = std::move(p.warnings);
  out.importance = clamp_score(v.at("importance").get<double>(), "importance", out.warnings);
  out.surprise = clamp_score(v.at("surprise").get<double>(), "surprise", out.warnings);
  out.emotion = clamp_score(v.at("emotion").get<double>(), "emotion", out.warnings);
  out.entities = string_list(v, "entities");
  return out;
}

CortexOutput parse_cortex(std::string_view raw) {
  auto p = parse_structured(raw, SchemaKind::Cortex);
  const auto& v = p.value;
  CortexOutput out;
  out.warnings = std::move(p.warnings);
  out.is_noise = v.at("is_noise").get<bool>();
  out.category = v.at("category").get<std::string>();
  out.importance = clamp_score(v.at("importance").get<double>(), "importance", out.warnings);
  out.surprise = clamp_score(v.at("surprise").get<double>(), "surprise", out.warnings);
  out.emotion = clamp_score(v.at("emotion").get<double>(), "emotion", out.warnings);
  out.entities = string_list(v, "entities");
  out.reason = v.value("reason", std::string());
  return out;
}

ExtractionOutput parse_extraction(std::string_view raw) {
  const std::string raw_s(raw);
  auto p = parse_structured(raw, SchemaKind::Extraction);
  ExtractionOutput out;
  for (const auto& e : p.value.at("entities")) {
    out.entities.push_back({field_string(e, "type", raw_s), field_string(e, "name", raw_s)});
  }
  for (const auto& r : p.value.at("relations")) {
    out.relations.push_back({field_string(r, "source", raw_s), field_string(r, "relation", raw_s),
                             field_string(r, "target", raw_s)});
  }
  return out;
}

}  // namespace cranimem
