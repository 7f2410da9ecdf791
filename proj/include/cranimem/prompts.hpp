#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>

namespace cranimem {

enum class PromptKind {
  Gating,
  UtilityTagging,
  ReflexUtility,
  CortexGating,
  Reasoning,
  RelationExtraction,
  EntityExtraction,
};

inline constexpr std::array<PromptKind, 7> kAllPromptKinds = {
    PromptKind::Gating,         PromptKind::UtilityTagging,     PromptKind::ReflexUtility,
    PromptKind::CortexGating,   PromptKind::Reasoning,          PromptKind::RelationExtraction,
    PromptKind::EntityExtraction,
};

const char* to_string(PromptKind kind);

// Bundled asset text, byte-for-byte as shipped under assets/prompts.
std::string_view prompt_template(PromptKind kind);
const char* prompt_asset_name(PromptKind kind);

// Python-format style substitution: `{name}` is replaced from `values`,
// `{{` and `}}` become literal braces. An unknown placeholder is a
// ContractError, so a template can never be sent half-filled.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

}  // namespace cranimem
