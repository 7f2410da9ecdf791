#include "cranimem/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>

#include "cranimem/errors.hpp"
#include "cranimem/text.hpp"

namespace cranimem {

namespace {

const char* const kKeys[] = {
    "tau_noise",          "tau_reflex",          "buffer_capacity",
    "consolidation_period", "tau_consolidation", "prune_floor",
    "alpha",              "freq_bonus_cap",      "retrieval_top_k_buffer",
    "retrieval_top_k_graph", "max_hops",         "context_char_budget",
    "gate_enabled",       "gate_profile",
};

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a real number, got '" + value + "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  auto v = normalize_name(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + value + "'");
}

void check_unit(const char* key, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(key) + " must be in [0,1]");
}

void check_positive(const char* key, std::int64_t v) {
  if (v <= 0) throw ConfigError(std::string(key) + " must be a positive integer");
}

}  // namespace

void EngineConfig::validate() const {
  check_unit("tau_noise", tau_noise);
  check_unit("tau_reflex", tau_reflex);
  if (tau_noise > tau_reflex) throw ConfigError("tau_noise must be <= tau_reflex");
  check_positive("buffer_capacity", buffer_capacity);
  check_positive("consolidation_period", consolidation_period);
  if (!(tau_consolidation >= 0.0)) throw ConfigError("tau_consolidation must be >= 0");
  if (prune_floor) {
    if (!(*prune_floor >= 0.0)) throw ConfigError("prune_floor must be >= 0");
    if (*prune_floor > tau_consolidation)
      throw ConfigError("prune_floor must be <= tau_consolidation");
  }
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (!(freq_bonus_cap >= 0.0)) throw ConfigError("freq_bonus_cap must be >= 0");
  check_positive("retrieval_top_k_buffer", retrieval_top_k_buffer);
  check_positive("retrieval_top_k_graph", retrieval_top_k_graph);
  check_positive("max_hops", max_hops);
  check_positive("context_char_budget", context_char_budget);
}

void EngineConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "tau_noise") tau_noise = parse_real(key, value);
  else if (key == "tau_reflex") tau_reflex = parse_real(key, value);
  else if (key == "buffer_capacity") buffer_capacity = parse_int(key, value);
  else if (key == "consolidation_period") consolidation_period = parse_int(key, value);
  else if (key == "tau_consolidation") tau_consolidation = parse_real(key, value);
  else if (key == "prune_floor") prune_floor = parse_real(key, value);
  else if (key == "alpha") alpha = parse_real(key, value);
  else if (key == "freq_bonus_cap") freq_bonus_cap = parse_real(key, value);
  else if (key == "retrieval_top_k_buffer") retrieval_top_k_buffer = parse_int(key, value);
  else if (key == "retrieval_top_k_graph") retrieval_top_k_graph = parse_int(key, value);
  else if (key == "max_hops") max_hops = parse_int(key, value);
  else if (key == "context_char_budget") context_char_budget = parse_int(key, value);
  else if (key == "gate_enabled") gate_enabled = parse_bool(key, value);
  else if (key == "gate_profile") {
    auto v = normalize_name(value);
    if (v == "similarity") gate_profile = GateProfile::SimilarityRouted;
    else if (v == "priority") gate_profile = GateProfile::Priority;
    else throw ConfigError("gate_profile: expected 'similarity' or 'priority'");
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

EngineConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  EngineConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return config;
}

void apply_env_overrides(EngineConfig& config) {
  for (const char* key : kKeys) {
    std::string name = "CRANIMEM_";
    for (const char* p = key; *p; ++p)
      name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(*p))));
    if (const char* v = std::getenv(name.c_str())) config.set(key, v);
  }
}

EngineConfig load_config(const std::optional<std::filesystem::path>& path) {
  EngineConfig config = path ? load_config_file(*path) : EngineConfig{};
  apply_env_overrides(config);
  config.validate();
  return config;
}

nlohmann::json to_json(const EngineConfig& c) {
  nlohmann::json j = {
      {"tau_noise", c.tau_noise},
      {"tau_reflex", c.tau_reflex},
      {"buffer_capacity", c.buffer_capacity},
      {"consolidation_period", c.consolidation_period},
      {"tau_consolidation", c.tau_consolidation},
      {"alpha", c.alpha},
      {"freq_bonus_cap", c.freq_bonus_cap},
      {"retrieval_top_k_buffer", c.retrieval_top_k_buffer},
      {"retrieval_top_k_graph", c.retrieval_top_k_graph},
      {"max_hops", c.max_hops},
      {"context_char_budget", c.context_char_budget},
      {"gate_enabled", c.gate_enabled},
      {"gate_profile", c.gate_profile == GateProfile::Priority ? "priority" : "similarity"},
  };
  if (c.prune_floor) j["prune_floor"] = *c.prune_floor;
  return j;
}

EngineConfig config_from_json(const nlohmann::json& j) {
  EngineConfig c;
  try {
    c.tau_noise = j.at("tau_noise").get<double>();
    c.tau_reflex = j.at("tau_reflex").get<double>();
    c.buffer_capacity = j.at("buffer_capacity").get<std::int64_t>();
    c.consolidation_period = j.at("consolidation_period").get<std::int64_t>();
    c.tau_consolidation = j.at("tau_consolidation").get<double>();
    if (j.contains("prune_floor")) c.prune_floor = j.at("prune_floor").get<double>();
    c.alpha = j.at("alpha").get<double>();
    c.freq_bonus_cap = j.at("freq_bonus_cap").get<double>();
    c.retrieval_top_k_buffer = j.at("retrieval_top_k_buffer").get<std::int64_t>();
    c.retrieval_top_k_graph = j.at("retrieval_top_k_graph").get<std::int64_t>();
    c.max_hops = j.at("max_hops").get<std::int64_t>();
    c.context_char_budget = j.at("context_char_budget").get<std::int64_t>();
    c.gate_enabled = j.value("gate_enabled", true);
    c.gate_profile = j.value("gate_profile", std::string("similarity")) == "priority"
                         ? GateProfile::Priority
                         : GateProfile::SimilarityRouted;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config snapshot: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace cranimem
