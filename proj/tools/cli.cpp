#include "cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "cranimem/errors.hpp"
#include "cranimem/eval.hpp"
#include "cranimem/http_backend.hpp"
#include "cranimem/offline_backend.hpp"
#include "cranimem/persistence.hpp"
#include "cranimem/serialization.hpp"
#include "cranimem/service.hpp"
#include "cranimem/text.hpp"

namespace cranimem::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::string state_dir = "cranimem-state";
  std::string profile_path;
  std::string session = "default";
  std::string goal;
  bool mock = false;
  bool verbose = false;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

EngineConfig engine_config(const Globals& g) {
  return load_config(g.config_path.empty() ? std::nullopt : std::optional<fs::path>(g.config_path));
}

struct BackendChoice {
  Backends backends;
  std::string fingerprint;
};

BackendChoice backends_for(const Globals& g) {
  if (g.mock) return {make_offline_backends(), "offline-mock"};
  if (g.profile_path.empty()) throw UsageError("no backend selected: pass --backend-profile FILE or --mock");
  auto profile = BackendProfile::load(g.profile_path);
  return {make_http_backends(profile), profile.fingerprint()};
}

fs::path session_dir(const Globals& g) { return fs::path(g.state_dir) / g.session; }

SessionState load_or_fresh(const Globals& g) {
  const auto dir = session_dir(g);
  if (has_state(dir)) return load(dir);
  return SessionState::fresh(g.session, g.goal, engine_config(g));
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(digits);
  ss << v;
  return ss.str();
}

void print_outcome(std::ostream& out, const ConsolidationOutcome& o) {
  out << "consolidation at turn " << o.triggered_at_turn << ": " << o.promoted.size() << " promoted, "
      << o.pruned.size() << " pruned, " << o.retained.size() << " retained";
  if (!o.errors.empty()) out << ", " << o.errors.size() << " error(s)";
  out << "\n";
  for (const auto& e : o.errors) out << "  error " << e.item_id << ": " << e.message << "\n";
}

int cmd_ingest(const Globals& g, const std::string& file, bool idle_at_end, std::istream& in, std::ostream& out) {
  auto choice = backends_for(g);
  Engine engine(load_or_fresh(g), choice.backends);
  if (trim(engine.state().goal.goal_text).empty()) {
    throw UsageError("the session has no goal yet: pass --goal on the first ingest");
  }

  std::ifstream file_in;
  std::istream* src = &in;
  if (!file.empty() && file != "-") {
    file_in.open(file);
    if (!file_in) throw ParseError("cannot open " + file, "");
    src = &file_in;
  }

  int backend_failures = 0;
  std::string line;
  while (std::getline(*src, line)) {
    if (trim(line).empty()) continue;
    auto t = engine.ingest(line);
    out << "turn " << t.turn_id << ": ";
    if (!t.decision) {
      out << "dropped (" << t.error.value_or("gate failure") << ")\n";
      if (t.backend_failure) ++backend_failures;
    } else {
      const auto& d = *t.decision;
      out << to_string(d.verdict) << " via " << to_string(d.route) << ", similarity " << fixed(d.similarity);
      if (t.stored_item_id) out << ", stored " << *t.stored_item_id;
      if (t.evicted_item_id) out << ", evicted " << *t.evicted_item_id;
      out << "\n";
    }
    if (t.consolidation) print_outcome(out, *t.consolidation);
  }
  if (idle_at_end) {
    if (auto o = engine.tick(true)) print_outcome(out, *o);
  }
  save(engine.state(), session_dir(g));
  return backend_failures > 0 ? kBackend : kOk;
}

int cmd_query(const Globals& g, const std::vector<std::string>& words, bool show_context, std::ostream& out) {
  std::string q;
  for (const auto& w : words) q += (q.empty() ? "" : " ") + w;
  if (trim(q).empty()) throw UsageError("query text is empty");
  auto choice = backends_for(g);
  Engine engine(load_or_fresh(g), choice.backends);
  auto r = engine.query(q);
  if (show_context) out << r.block.render() << "\n";
  if (r.parse_error) out << "warning: " << *r.parse_error << "\n";
  out << r.answer << "\n";
  save(engine.state(), session_dir(g));
  return kOk;
}

int cmd_consolidate(const Globals& g, std::ostream& out) {
  auto choice = backends_for(g);
  Engine engine(load_or_fresh(g), choice.backends);
  print_outcome(out, engine.consolidate());
  save(engine.state(), session_dir(g));
  return kOk;
}

struct BenchArgs {
  std::string dataset;
  std::string out = "run_report.json";
  bool clean = false;
  bool noisy = false;
  std::int64_t noise_m = 3;
  std::int64_t noise_every = 2;
  std::string policy = "cross_record";
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string label = "CraniMem";
};

int cmd_bench(const Globals& g, const BenchArgs& a, std::ostream& out) {
  const auto records = load_dataset(a.dataset);
  if (records.empty()) throw ParseError("dataset " + a.dataset + " has no records", "");
  const auto config = engine_config(g);
  auto choice = backends_for(g);

  BenchmarkOptions opts;
  opts.clean = a.clean || !a.noisy;
  opts.noisy = a.noisy || !a.clean;
  opts.noise.distractors_per_event = a.noise_m;
  opts.noise.every_k = a.noise_every;
  opts.noise.policy = pool_policy_from_string(a.policy);
  opts.noise.seed = a.seed;
  opts.jobs = a.jobs;
  opts.label = a.label;
  opts.config = config;
  opts.backend_fingerprint = choice.fingerprint;

  EngineFactory factory = [&](const EvalRecord& r, std::size_t) {
    return std::make_unique<Engine>(SessionState::fresh(r.record_id, r.question, config), choice.backends);
  };
  const auto report = run_benchmark(records, factory, opts);

  std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
  if (!f) throw PersistenceError("cannot write " + a.out);
  f << report.to_json(true).dump(2) << "\n";
  out << report.table();
  std::int64_t flagged = 0;
  if (report.clean) flagged += report.clean->flagged;
  if (report.noisy) flagged += report.noisy->flagged;
  if (flagged > 0) out << flagged << " record(s) flagged for backend failures\n";
  out << "report written to " << a.out << "\n";
  return kOk;
}

int cmd_inspect(const Globals& g, bool buffer, bool graph, bool trash, bool dot, std::ostream& out) {
  const auto dir = session_dir(g);
  SessionState st = has_state(dir) ? load(dir) : SessionState::fresh(g.session, g.goal, engine_config(g));
  if (dot) {
    out << st.graph.export_dot();
    return kOk;
  }
  const bool all = !buffer && !graph && !trash;
  if (all) {
    out << "session " << st.session_id << ", turn " << st.turn << ", goal: "
        << (st.goal.goal_text.empty() ? "(none)" : st.goal.goal_text) << "\n";
  }
  if (all || buffer) {
    out << st.buffer.size() << "/" << st.buffer.capacity() << " buffered, " << st.buffer.evicted_count()
        << " evicted\n";
    for (const auto& it : st.buffer.items()) {
      out << "  " << it.item_id << " [" << to_string(it.gate_route) << " " << fixed(it.gate_similarity)
          << ", u " << fixed(it.utility.base_utility) << ", reads " << it.access_count << "] " << it.snippet
          << "\n";
    }
  }
  if (all || graph) {
    out << st.graph.node_count() << " nodes, " << st.graph.edge_count() << " edges\n";
    for (const auto& [id, n] : st.graph.nodes()) {
      out << "  node " << id << " " << n.name << " (" << to_string(n.entity_type) << ", x" << n.reinforcement
          << ")\n";
    }
    for (const auto& [id, e] : st.graph.edges()) {
      out << "  edge " << id << " " << st.graph.node(e.source_node_id)->name << " -" << e.relation << "-> "
          << st.graph.node(e.target_node_id)->name << " (x" << e.reinforcement << ")\n";
    }
  }
  if (all || trash) {
    out << st.trash.size() << " trashed\n";
    for (const auto& t : st.trash.entries()) {
      out << "  " << t.item.item_id << " " << to_string(t.reason) << " at turn " << t.at_turn;
      if (t.score) out << ", score " << fixed(*t.score);
      out << ": " << t.item.snippet << "\n";
    }
  }
  return kOk;
}

MemoryService* g_serving = nullptr;

void on_signal(int) {
  if (g_serving) g_serving->stop();
}

int cmd_serve(const Globals& g, const std::string& host, int port, bool no_persist) {
  auto choice = backends_for(g);
  ServiceOptions opts;
  opts.backends = choice.backends;
  opts.config = engine_config(g);
  if (!no_persist) opts.state_dir = fs::path(g.state_dir);
  MemoryService service(std::move(opts));
  g_serving = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const bool ok = service.listen(host, port);
  g_serving = nullptr;
  if (!ok) throw UsageError("could not bind " + host + ":" + std::to_string(port));
  return kOk;
}

int cmd_import(const std::string& input, const std::string& output, std::size_t limit, std::ostream& out) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw ParseError("cannot open " + input, "");
  auto native = nlohmann::json::parse(in, nullptr, false);
  if (native.is_discarded()) throw ParseError(input + " is not valid JSON", "");
  const auto records = import_hotpotqa(native, limit);
  std::ofstream f(output, std::ios::binary | std::ios::trunc);
  if (!f) throw PersistenceError("cannot write " + output);
  f << write_dataset(records);
  out << records.size() << " record(s) written to " << output << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"cranimem: gated episodic and semantic memory for LLM agents"};
  app.name("cranimem");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "engine config file (key = value lines)");
  app.add_option("--state-dir", g.state_dir, "directory holding one subdirectory per session");
  app.add_option("--backend-profile", g.profile_path, "JSON backend profile for HTTP model servers");
  app.add_flag("--mock", g.mock, "use the deterministic offline backend");
  app.add_option("--session", g.session, "session id")->check([](const std::string& s) {
    for (char c : s) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return std::string("bad session id");
    }
    return s.empty() ? std::string("bad session id") : std::string();
  });
  app.add_option("--goal", g.goal, "goal text for a new session");
  app.add_flag("-v,--verbose", g.verbose, "debug logging");

  auto* ingest = app.add_subcommand("ingest", "gate turns from a file or stdin, one per line");
  std::string ingest_file;
  bool idle_at_end = false;
  ingest->add_option("file", ingest_file, "input file ('-' or omitted for stdin)");
  ingest->add_flag("--idle", idle_at_end, "run an idle consolidation tick after the last turn");

  auto* query = app.add_subcommand("query", "retrieve context and answer");
  std::vector<std::string> query_words;
  bool show_context = false;
  query->add_option("text", query_words, "question")->required();
  query->add_flag("--show-context", show_context, "print the context block before the answer");

  auto* consolidate = app.add_subcommand("consolidate", "force a consolidation run");

  auto* bench = app.add_subcommand("bench", "clean vs noisy benchmark");
  BenchArgs ba;
  bench->add_option("--dataset", ba.dataset, "line-delimited dataset")->required();
  bench->add_option("--out", ba.out, "report path");
  bench->add_flag("--clean", ba.clean, "run the clean setting");
  bench->add_flag("--noisy", ba.noisy, "run the noisy setting");
  bench->add_option("--noise-m", ba.noise_m, "distractors per injection event")->check(CLI::PositiveNumber);
  bench->add_option("--noise-every", ba.noise_every, "task writes between injection events")
      ->check(CLI::NonNegativeNumber);
  bench->add_option("--noise-pool", ba.policy, "distractor pool")
      ->check(CLI::IsMember({"cross_record", "synthetic"}));
  bench->add_option("--seed", ba.seed, "injection seed");
  bench->add_option("--jobs", ba.jobs, "records evaluated in parallel")->check(CLI::PositiveNumber);
  bench->add_option("--label", ba.label, "row label in the table");

  auto* inspect = app.add_subcommand("inspect", "dump session state");
  bool show_buffer = false, show_graph = false, show_trash = false, show_dot = false;
  inspect->add_flag("--buffer", show_buffer);
  inspect->add_flag("--graph", show_graph);
  inspect->add_flag("--trash", show_trash);
  inspect->add_flag("--dot", show_dot, "graph as Graphviz DOT");

  auto* serve = app.add_subcommand("serve", "HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  bool no_persist = false;
  serve->add_option("--host", host, "bind address (keep it on loopback, there is no auth)");
  serve->add_option("--port", port)->check(CLI::Range(1, 65535));
  serve->add_flag("--no-persist", no_persist, "keep sessions in memory only");

  auto* import = app.add_subcommand("import", "convert HotpotQA JSON to a dataset file");
  std::string import_in, import_out;
  std::size_t limit = 0;
  import->add_option("--hotpotqa", import_in, "HotpotQA distribution JSON")->required();
  import->add_option("--out", import_out, "output dataset")->required();
  import->add_option("--limit", limit, "keep the first N records (0 keeps all)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::warn);
  try {
    if (*ingest) return cmd_ingest(g, ingest_file, idle_at_end, in, out);
    if (*query) return cmd_query(g, query_words, show_context, out);
    if (*consolidate) return cmd_consolidate(g, out);
    if (*bench) return cmd_bench(g, ba, out);
    if (*inspect) return cmd_inspect(g, show_buffer, show_graph, show_trash, show_dot, out);
    if (*serve) return cmd_serve(g, host, port, no_persist);
    if (*import) return cmd_import(import_in, import_out, limit, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const BackendUnavailable& e) {
    err << "backend failure: " << e.what() << "\n";
    return kBackend;
  } catch (const GateError& e) {
    err << "gate failure: " << e.what() << "\n";
    return e.backend_unavailable() ? kBackend : kData;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kData;
  }
  err << app.help();
  return kUsage;
}

}  // namespace cranimem::cli
