#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

namespace cranimem {

enum class GateProfile { SimilarityRouted, Priority };

struct EngineConfig {
  double tau_noise = 0.35;
  double tau_reflex = 0.75;
  std::int64_t buffer_capacity = 50;
  std::int64_t consolidation_period = 10;
  double tau_consolidation = 0.5;
  std::optional<double> prune_floor;  // defaults to tau_consolidation / 2
  double alpha = 0.5;
  double freq_bonus_cap = 3.0;
  std::int64_t retrieval_top_k_buffer = 5;
  std::int64_t retrieval_top_k_graph = 10;
  std::int64_t max_hops = 2;
  std::int64_t context_char_budget = 4000;
  bool gate_enabled = true;
  GateProfile gate_profile = GateProfile::SimilarityRouted;

  double effective_prune_floor() const {
    return prune_floor.value_or(tau_consolidation / 2.0);
  }

  // Throws ConfigError naming the first key out of range.
  void validate() const;

  // Applies one "key = value" override; unknown keys are a ConfigError.
  void set(const std::string& key, const std::string& value);

  bool operator==(const EngineConfig&) const = default;
};

// Flat key/value file: one `key = value` per line, `#` starts a comment.
EngineConfig load_config_file(const std::filesystem::path& path);

// Overlays CRANIMEM_<KEY> environment variables (upper-cased key names).
void apply_env_overrides(EngineConfig& config);

EngineConfig load_config(const std::optional<std::filesystem::path>& path);

nlohmann::json to_json(const EngineConfig& config);
EngineConfig config_from_json(const nlohmann::json& j);

}  // namespace cranimem
