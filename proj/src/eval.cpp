#include "cranimem/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "cranimem/errors.hpp"
#include "cranimem/text.hpp"

namespace cranimem {

using nlohmann::json;

void EvalRecord::validate() const {
  if (record_id.empty()) throw DomainError("id", "record id is empty");
  if (trim(question).empty()) throw DomainError("question", "record " + record_id + " has an empty question");
  if (trim(gold_answer).empty()) throw DomainError("answer", "record " + record_id + " has an empty answer");
  if (context_snippets.empty()) throw DomainError("contexts", "record " + record_id + " has no contexts");
}

std::vector<EvalRecord> parse_dataset(const std::string& ndjson, const std::string& origin) {
  std::vector<EvalRecord> out;
  std::istringstream in(ndjson);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto where = origin + ":" + std::to_string(lineno);
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError(where + ": not a JSON object", line);
    EvalRecord r;
    try {
      r.record_id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      r.question = j.at("question").get<std::string>();
      r.gold_answer = j.at("answer").get<std::string>();
      r.context_snippets = j.at("contexts").get<std::vector<std::string>>();
      r.source = j.value("source", "");
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what(), line);
    }
    try {
      r.validate();
    } catch (const DomainError& e) {
      throw ParseError(where + ": " + e.what(), line);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EvalRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open dataset " + path.string(), "");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), path.string());
}

std::string write_dataset(const std::vector<EvalRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += json{{"id", r.record_id},
                {"question", r.question},
                {"answer", r.gold_answer},
                {"contexts", r.context_snippets},
                {"source", r.source}}
               .dump() + "\n";
  }
  return out;
}

std::vector<EvalRecord> import_hotpotqa(const json& native, std::size_t limit) {
  if (!native.is_array()) throw ParseError("HotpotQA input must be a JSON array", native.dump().substr(0, 200));
  std::vector<EvalRecord> out;
  for (std::size_t i = 0; i < native.size(); ++i) {
    if (limit != 0 && out.size() >= limit) break;
    const auto& q = native[i];
    EvalRecord r;
    try {
      r.record_id = q.at("_id").get<std::string>();
      r.question = q.at("question").get<std::string>();
      r.gold_answer = q.at("answer").get<std::string>();
      for (const auto& para : q.at("context")) {
        std::string text = para.at(0).get<std::string>() + ":";
        for (const auto& sentence : para.at(1)) text += " " + trim(sentence.get<std::string>());
        r.context_snippets.push_back(std::move(text));
      }
      r.source = "hotpotqa";
    } catch (const json::exception& e) {
      throw ParseError("HotpotQA entry " + std::to_string(i) + ": " + e.what(), q.dump().substr(0, 200));
    }
    try {
      r.validate();
    } catch (const DomainError& e) {
      throw ParseError("HotpotQA entry " + std::to_string(i) + ": " + e.what(), q.dump().substr(0, 200));
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

std::vector<std::string> answer_tokens(const std::string& text) {
  std::string stripped;
  stripped.reserve(text.size());
  for (unsigned char c : text) {
    if (std::ispunct(c)) continue;
    stripped.push_back(static_cast<char>(std::tolower(c)));
  }
  std::vector<std::string> tokens;
  std::istringstream in(stripped);
  std::string tok;
  while (in >> tok) {
    if (tok == "a" || tok == "an" || tok == "the") continue;
    tokens.push_back(tok);
  }
  return tokens;
}

}  // namespace

std::string normalize_answer(const std::string& text) {
  std::string out;
  for (const auto& t : answer_tokens(text)) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

PRF token_prf(const std::string& prediction, const std::string& gold) {
  const auto gold_tokens = answer_tokens(gold);
  if (gold_tokens.empty()) throw DomainError("gold", "gold answer is empty after normalization");
  const auto pred_tokens = answer_tokens(prediction);
  if (pred_tokens.empty()) return {};

  std::map<std::string, long> gold_counts;
  for (const auto& t : gold_tokens) ++gold_counts[t];
  long overlap = 0;
  for (const auto& t : pred_tokens) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return {};
  PRF r;
  r.precision = static_cast<double>(overlap) / static_cast<double>(pred_tokens.size());
  r.recall = static_cast<double>(overlap) / static_cast<double>(gold_tokens.size());
  r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

double noise_drop(double f1_clean, double f1_noisy) {
  if (!(f1_clean >= 0.0 && f1_clean <= 1.0)) throw DomainError("f1_clean", "F1 must lie in [0,1]");
  if (!(f1_noisy >= 0.0 && f1_noisy <= 1.0)) throw DomainError("f1_noisy", "F1 must lie in [0,1]");
  return f1_clean - f1_noisy;
}

std::string to_string(PoolPolicy p) { return p == PoolPolicy::CrossRecord ? "cross_record" : "synthetic"; }

PoolPolicy pool_policy_from_string(const std::string& s) {
  if (s == "cross_record") return PoolPolicy::CrossRecord;
  if (s == "synthetic") return PoolPolicy::Synthetic;
  throw ConfigError("unknown distractor pool policy '" + s + "'");
}

void NoiseConfig::validate() const {
  if (distractors_per_event < 1) throw ConfigError("distractors_per_event must be positive");
  if (every_k < 0) throw ConfigError("every_k must be non-negative");
}

std::vector<std::size_t> NoiseConfig::schedule(std::size_t stream_length) const {
  std::vector<std::size_t> events;
  if (!positions.empty()) {
    events = positions;
    std::sort(events.begin(), events.end());
    if (events.back() > stream_length) {
      throw ConfigError("injection position " + std::to_string(events.back()) + " is past the stream end (" +
                        std::to_string(stream_length) + ")");
    }
    return events;
  }
  if (every_k == 0) return events;
  for (std::size_t p = static_cast<std::size_t>(every_k); p <= stream_length; p += every_k) events.push_back(p);
  return events;
}

const std::vector<std::string>& synthetic_pool() {
  static const std::vector<std::string> pool = {
      "The cafeteria menu rotates between soup and salad every other week.",
      "Someone left a blue umbrella by the front desk this morning.",
      "The parking garage closes early on public holidays.",
      "A new coffee machine was installed on the third floor.",
      "The weather forecast mentions light rain over the weekend.",
      "The office plants are watered on Mondays and Thursdays.",
      "The elevator inspection is scheduled for next month.",
      "Several chairs in the lounge were replaced last spring.",
      "The vending machine now accepts contactless payments.",
      "A marathon will pass along the river road on Sunday.",
      "The library extended its evening hours for the summer.",
      "Fresh paint is drying on the stairwell railings.",
  };
  return pool;
}

std::vector<StreamEntry> inject(const std::vector<std::string>& stream, const NoiseConfig& noise,
                                const std::vector<std::string>& pool, std::uint64_t salt) {
  noise.validate();
  const auto events = noise.schedule(stream.size());
  const auto& source = noise.policy == PoolPolicy::Synthetic ? synthetic_pool() : pool;
  if (!events.empty() && source.empty()) throw ConfigError("distractor pool is empty");

  std::seed_seq seq{static_cast<std::uint32_t>(noise.seed), static_cast<std::uint32_t>(noise.seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  std::mt19937_64 rng(seq);

  std::vector<StreamEntry> out;
  out.reserve(stream.size() + events.size() * static_cast<std::size_t>(noise.distractors_per_event));
  std::size_t next_event = 0;
  auto flush_events_at = [&](std::size_t position) {
    while (next_event < events.size() && events[next_event] == position) {
      for (std::int64_t k = 0; k < noise.distractors_per_event; ++k) {
        out.push_back({source[rng() % source.size()], true});
      }
      ++next_event;
    }
  };
  flush_events_at(0);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    out.push_back({stream[i], false});
    flush_events_at(i + 1);
  }
  return out;
}

std::vector<std::string> cross_record_pool(const std::vector<EvalRecord>& records, std::size_t index) {
  std::vector<std::string> pool;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i == index) continue;
    pool.insert(pool.end(), records[i].context_snippets.begin(), records[i].context_snippets.end());
  }
  return pool;
}

LatencyStats latency_stats(std::vector<double> samples) {
  LatencyStats s;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean_ms = sum / static_cast<double>(samples.size());
  // Nearest-rank percentiles.
  auto rank = [&](double q) {
    auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples.size())));
    return samples[std::clamp<std::size_t>(idx, 1, samples.size()) - 1];
  };
  s.p50_ms = rank(0.50);
  s.p95_ms = rank(0.95);
  return s;
}

RecordResult run_record(const EvalRecord& record, Engine& engine, const std::vector<StreamEntry>& stream) {
  const auto start = std::chrono::steady_clock::now();
  RecordResult r;
  r.record_id = record.record_id;
  r.gold = record.gold_answer;

  auto flag = [&](const std::string& why) {
    r.flagged = true;
    r.error = why;
    r.prediction.clear();
    spdlog::warn("record {} flagged: {}", record.record_id, why);
  };

  try {
    for (const auto& entry : stream) {
      auto turn = engine.ingest(entry.text);
      ++r.writes;
      if (entry.distractor) ++r.distractors;
      if (turn.stored_item_id) {
        ++r.accepted;
        if (entry.distractor) ++r.distractors_accepted;
      }
      if (turn.backend_failure) throw BackendUnavailable(turn.error.value_or("backend failure"));
    }
    engine.tick(true);
    auto q = engine.query(record.question);
    r.prediction = q.answer;
  } catch (const BackendUnavailable& e) {
    flag(e.what());
  }

  r.turns = engine.state().turn;
  r.prf = token_prf(r.prediction, record.gold_answer);
  r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  for (const auto& c : engine.calls().snapshot()) r.backend_latency_ms += c.latency_ms;
  return r;
}

SettingReport run_setting(const std::vector<EvalRecord>& records, const EngineFactory& factory,
                          const std::optional<NoiseConfig>& noise, std::size_t jobs) {
  if (records.empty()) throw ContractError("benchmark needs at least one record");
  SettingReport report;
  report.setting = noise ? "noisy" : "clean";
  report.records.resize(records.size());

  auto work = [&](std::size_t i) {
    const auto& rec = records[i];
    std::vector<StreamEntry> stream;
    if (noise) {
      stream = inject(rec.context_snippets, *noise, cross_record_pool(records, i), i);
    } else {
      for (const auto& s : rec.context_snippets) stream.push_back({s, false});
    }
    auto engine = factory(rec, i);
    if (!engine) throw ContractError("engine factory returned null");
    report.records[i] = run_record(rec, *engine, stream);
  };

  jobs = std::max<std::size_t>(1, std::min(jobs, records.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < records.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(jobs);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = next++; i < records.size(); i = next++) work(i);
        } catch (...) {
          failures[t] = std::current_exception();
          next = records.size();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }

  // Single-threaded reduction in record order.
  std::vector<double> latencies;
  for (const auto& r : report.records) {
    report.mean.precision += r.prf.precision;
    report.mean.recall += r.prf.recall;
    report.mean.f1 += r.prf.f1;
    latencies.push_back(r.latency_ms);
    if (r.flagged) ++report.flagged;
  }
  const auto n = static_cast<double>(report.records.size());
  report.mean.precision /= n;
  report.mean.recall /= n;
  report.mean.f1 /= n;
  report.latency = latency_stats(std::move(latencies));
  return report;
}

RunReport run_benchmark(const std::vector<EvalRecord>& records, const EngineFactory& factory,
                        const BenchmarkOptions& options) {
  if (!options.clean && !options.noisy) throw ContractError("select at least one of clean or noisy");
  RunReport report;
  report.label = options.label;
  report.config = options.config;
  report.backend_fingerprint = options.backend_fingerprint;
  if (options.clean) report.clean = run_setting(records, factory, std::nullopt, options.jobs);
  if (options.noisy) {
    report.noise = options.noise;
    report.noisy = run_setting(records, factory, options.noise, options.jobs);
  }
  if (report.clean && report.noisy) report.delta_noise = noise_drop(report.clean->mean.f1, report.noisy->mean.f1);
  return report;
}

namespace {

json prf_json(const PRF& p) { return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}}; }

json setting_json(const SettingReport& s, bool include_latency) {
  json records = json::array();
  for (const auto& r : s.records) {
    json j = {{"id", r.record_id},
              {"prediction", r.prediction},
              {"gold", r.gold},
              {"precision", r.prf.precision},
              {"recall", r.prf.recall},
              {"f1", r.prf.f1},
              {"turns", r.turns},
              {"writes", r.writes},
              {"accepted", r.accepted},
              {"distractors", r.distractors},
              {"distractors_accepted", r.distractors_accepted},
              {"flagged", r.flagged}};
    if (r.error) j["error"] = *r.error;
    if (include_latency) {
      j["latency_ms"] = r.latency_ms;
      j["backend_latency_ms"] = r.backend_latency_ms;
    }
    records.push_back(std::move(j));
  }
  json out = {{"setting", s.setting}, {"mean", prf_json(s.mean)}, {"flagged", s.flagged}, {"records", records}};
  if (include_latency) {
    out["latency_ms"] = {{"mean", s.latency.mean_ms}, {"p50", s.latency.p50_ms}, {"p95", s.latency.p95_ms}};
  }
  return out;
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

json RunReport::to_json(bool include_latency) const {
  json j = {{"format", "cranimem.run_report"},
            {"version", 1},
            {"label", label},
            {"config", cranimem::to_json(config)},
            {"backend_fingerprint", backend_fingerprint}};
  j["clean"] = clean ? setting_json(*clean, include_latency) : json(nullptr);
  j["noisy"] = noisy ? setting_json(*noisy, include_latency) : json(nullptr);
  j["delta_noise"] = delta_noise ? json(*delta_noise) : json(nullptr);
  if (noise) {
    j["noise"] = {{"distractors_per_event", noise->distractors_per_event},
                  {"positions", noise->positions},
                  {"every_k", noise->every_k},
                  {"policy", to_string(noise->policy)},
                  {"seed", noise->seed}};
  } else {
    j["noise"] = nullptr;
  }
  return j;
}

std::string RunReport::table() const {
  auto cells = [](const std::optional<SettingReport>& s) {
    if (!s) return std::vector<std::string>(4, "-");
    return std::vector<std::string>{fixed3(s->mean.precision), fixed3(s->mean.recall), fixed3(s->mean.f1),
                                    fixed3(s->latency.mean_ms / 1000.0)};
  };
  const std::vector<std::string> header = {"Architecture", "Noisy P", "Noisy R", "Noisy F1", "Noisy Latency (s)",
                                           "Clean P", "Clean R", "Clean F1", "Clean Latency (s)",
                                           "Noise Drop"};
  std::vector<std::string> row = {label};
  for (auto& c : cells(noisy)) row.push_back(c);
  for (auto& c : cells(clean)) row.push_back(c);
  row.push_back(delta_noise ? fixed3(*delta_noise) : "-");

  std::string out;
  auto emit = [&](const std::vector<std::string>& cols) {
    std::string line = "|";
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const auto width = std::max(header[i].size(), row[i].size());
      std::string cell = cols[i];
      cell.resize(width, ' ');
      line += " " + cell + " |";
    }
    out += line + "\n";
  };
  emit(header);
  std::string rule = "|";
  for (std::size_t i = 0; i < header.size(); ++i) {
    rule += std::string(std::max(header[i].size(), row[i].size()) + 2, '-') + "|";
  }
  out += rule + "\n";
  emit(row);
  return out;
}

}  // namespace cranimem
