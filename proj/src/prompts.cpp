#include "cranimem/prompts.hpp"

#include "cranimem/errors.hpp"
#include "prompt_assets.hpp"

namespace cranimem {

const char* to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::Gating: return "gating";
    case PromptKind::UtilityTagging: return "utility_tagging";
    case PromptKind::ReflexUtility: return "reflex_utility";
    case PromptKind::CortexGating: return "cortex_gating";
    case PromptKind::Reasoning: return "reasoning";
    case PromptKind::RelationExtraction: return "relation_extraction";
    case PromptKind::EntityExtraction: return "entity_extraction";
  }
  return "unknown";
}

const char* prompt_asset_name(PromptKind kind) {
  switch (kind) {
    case PromptKind::Gating: return "gating.txt";
    case PromptKind::UtilityTagging: return "utility_tagging.txt";
    case PromptKind::ReflexUtility: return "reflex_utility.txt";
    case PromptKind::CortexGating: return "cortex_gating.txt";
    case PromptKind::Reasoning: return "reasoning.txt";
    case PromptKind::RelationExtraction: return "relation_extraction.txt";
    case PromptKind::EntityExtraction: return "entity_extraction.txt";
  }
  return "unknown";
}

std::string_view prompt_template(PromptKind kind) {
  switch (kind) {
    case PromptKind::Gating: return assets::gating;
    case PromptKind::UtilityTagging: return assets::utility_tagging;
    case PromptKind::ReflexUtility: return assets::reflex_utility;
    case PromptKind::CortexGating: return assets::cortex_gating;
    case PromptKind::Reasoning: return assets::reasoning;
    case PromptKind::RelationExtraction: return assets::relation_extraction;
    case PromptKind::EntityExtraction: return assets::entity_extraction;
  }
  return {};
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    const char c = tmpl[i];
    if (c == '{') {
      if (i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
        out.push_back('{');
        ++i;
        continue;
      }
      auto close = tmpl.find('}', i + 1);
      if (close == std::string_view::npos) throw ContractError("unterminated placeholder in template");
      std::string name(tmpl.substr(i + 1, close - i - 1));
      auto it = values.find(name);
      if (it == values.end()) throw ContractError("no value for template placeholder {" + name + "}");
      out += it->second;
      i = close;
    } else if (c == '}') {
      if (i + 1 < tmpl.size() && tmpl[i + 1] == '}') ++i;
      out.push_back('}');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace cranimem
