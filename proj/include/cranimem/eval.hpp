#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cranimem/config.hpp"
#include "cranimem/engine.hpp"

namespace cranimem {

struct EvalRecord {
  std::string record_id;
  std::string question;
  std::string gold_answer;
  std::vector<std::string> context_snippets;  // the task write stream, in order
  std::string source;

  void validate() const;  // throws DomainError
  bool operator==(const EvalRecord&) const = default;
};

// Line-delimited records: {"id","question","answer","contexts":[...],"source"}.
// Throws ParseError with the offending line number.
std::vector<EvalRecord> load_dataset(const std::filesystem::path& path);
std::vector<EvalRecord> parse_dataset(const std::string& ndjson, const std::string& origin = "<input>");
std::string write_dataset(const std::vector<EvalRecord>& records);

// HotpotQA distribution JSON (array of {_id, question, answer, context:
// [[title, [sentences...]], ...]}). Each paragraph becomes one context
// snippet "title: sentence sentence ...". limit == 0 keeps every record.
std::vector<EvalRecord> import_hotpotqa(const nlohmann::json& native, std::size_t limit = 0);

// Extractive-QA answer normalization: lower-case, drop punctuation and the
// articles a/an/the, collapse whitespace.
std::string normalize_answer(const std::string& text);

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool operator==(const PRF&) const = default;
};

// Bag-of-tokens overlap on normalized text. Empty prediction scores zero.
// Throws DomainError if the gold normalizes to nothing.
PRF token_prf(const std::string& prediction, const std::string& gold);

// f1_clean - f1_noisy; both must lie in [0,1].
double noise_drop(double f1_clean, double f1_noisy);

enum class PoolPolicy { CrossRecord, Synthetic };
std::string to_string(PoolPolicy p);
PoolPolicy pool_policy_from_string(const std::string& s);

struct NoiseConfig {
  std::int64_t distractors_per_event = 3;
  // Either explicit insertion points (an event at p lands after the p-th
  // task write) or, when empty, one event after every `every_k` writes.
  std::vector<std::size_t> positions;
  std::int64_t every_k = 2;
  PoolPolicy policy = PoolPolicy::CrossRecord;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
  std::vector<std::size_t> schedule(std::size_t stream_length) const;
  bool operator==(const NoiseConfig&) const = default;
};

struct StreamEntry {
  std::string text;
  bool distractor = false;
  bool operator==(const StreamEntry&) const = default;
};

// Inserts m snippets from `pool` at every scheduled event. `salt` lets
// callers decorrelate records while keeping runs reproducible. Throws
// ConfigError for an empty cross-record pool or an out-of-range position.
std::vector<StreamEntry> inject(const std::vector<std::string>& stream, const NoiseConfig& noise,
                                const std::vector<std::string>& pool, std::uint64_t salt = 0);

// A fixed list of goal-agnostic filler sentences for the synthetic policy.
const std::vector<std::string>& synthetic_pool();

struct RecordResult {
  std::string record_id;
  std::string prediction;
  std::string gold;
  PRF prf;
  double latency_ms = 0.0;          // wall clock over every turn of the record
  double backend_latency_ms = 0.0;  // sum of the per-call records
  std::int64_t turns = 0;
  std::int64_t writes = 0;
  std::int64_t accepted = 0;
  std::int64_t distractors = 0;
  std::int64_t distractors_accepted = 0;
  bool flagged = false;
  std::optional<std::string> error;

  bool operator==(const RecordResult&) const = default;
};

struct LatencyStats {
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  bool operator==(const LatencyStats&) const = default;
};

LatencyStats latency_stats(std::vector<double> samples_ms);

struct SettingReport {
  std::string setting;  // "clean" or "noisy"
  std::vector<RecordResult> records;
  PRF mean;
  LatencyStats latency;
  std::int64_t flagged = 0;
  bool operator==(const SettingReport&) const = default;
};

struct RunReport {
  std::string label;
  std::optional<SettingReport> clean;
  std::optional<SettingReport> noisy;
  std::optional<double> delta_noise;
  std::optional<NoiseConfig> noise;
  EngineConfig config;
  std::string backend_fingerprint;

  // Latency fields are omitted when include_latency is false, which makes
  // two identical runs byte-comparable.
  nlohmann::json to_json(bool include_latency = true) const;
  // Noisy P R F1 Latency(s) | Clean P R F1 Latency(s) | noise drop.
  std::string table() const;
};

using EngineFactory = std::function<std::unique_ptr<Engine>(const EvalRecord& record, std::size_t index)>;

struct BenchmarkOptions {
  bool clean = true;
  bool noisy = true;
  NoiseConfig noise;
  std::size_t jobs = 1;
  std::string label = "CraniMem";
  EngineConfig config;  // snapshot recorded in the report
  std::string backend_fingerprint;
};

// Runs one record through a fresh engine: the question becomes the goal,
// the stream is written turn by turn, an idle tick lets consolidation run,
// and the question is answered through retrieval.
RecordResult run_record(const EvalRecord& record, Engine& engine, const std::vector<StreamEntry>& stream);

SettingReport run_setting(const std::vector<EvalRecord>& records, const EngineFactory& factory,
                          const std::optional<NoiseConfig>& noise, std::size_t jobs);

RunReport run_benchmark(const std::vector<EvalRecord>& records, const EngineFactory& factory,
                        const BenchmarkOptions& options);

// The distractor pool for record `index` under the cross-record policy:
// every context snippet of every other record, in dataset order.
std::vector<std::string> cross_record_pool(const std::vector<EvalRecord>& records, std::size_t index);

}  // namespace cranimem
