#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cranimem {

enum class SchemaKind { Gating, Utility, Cortex, Extraction };

const char* to_string(SchemaKind kind);

// Repair pass: drops code fences and anything before the first '{' or after
// the last '}'. Returns nullopt when no brace pair exists.
std::optional<std::string> repair_json_text(std::string_view raw);

struct ParsedStructure {
  nlohmann::json value;               // validated object
  std::vector<std::string> warnings;  // ignored extra fields etc.
};

// Repair then strict parse against the schema's required fields and types.
// Throws ParseError carrying the raw text.
ParsedStructure parse_structured(std::string_view raw, SchemaKind kind);

struct GatingOutput {
  bool is_noise = false;
  int priority_score = 0;
  std::vector<std::string> entities;
  std::string reasoning;
};

struct UtilityOutput {
  double importance = 0.0;
  double surprise = 0.0;
  double emotion = 0.0;
  std::vector<std::string> entities;
  std::vector<std::string> warnings;
};

struct CortexOutput {
  bool is_noise = false;
  std::string category;
  double importance = 0.0;
  double surprise = 0.0;
  double emotion = 0.0;
  std::vector<std::string> entities;
  std::string reason;
  std::vector<std::string> warnings;
};

struct ExtractedEntity {
  std::string type;
  std::string name;
};

struct ExtractedRelation {
  std::string source;
  std::string relation;
  std::string target;
};

struct ExtractionOutput {
  std::vector<ExtractedEntity> entities;
  std::vector<ExtractedRelation> relations;
};

GatingOutput parse_gating(std::string_view raw);
UtilityOutput parse_utility(std::string_view raw);
CortexOutput parse_cortex(std::string_view raw);
ExtractionOutput parse_extraction(std::string_view raw);

// Scores outside [0,1] are clamped and a warning is appended.
double clamp_score(double v, const char* field, std::vector<std::string>& warnings);

}  // namespace cranimem
