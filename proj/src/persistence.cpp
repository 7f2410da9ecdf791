#include "cranimem/persistence.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "cranimem/checksum.hpp"
#include "cranimem/errors.hpp"
#include "cranimem/serialization.hpp"

namespace cranimem {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* const kRoles[] = {"buffer", "graph", "trash", "consolidation"};

void fsync_path(const fs::path& p) {
  int fd = ::open(p.c_str(), O_RDONLY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

// Writes `content` to dir/name through a temp file and an atomic rename.
void write_atomic(const fs::path& dir, const std::string& name, const std::string& content) {
  const fs::path tmp = dir / (name + ".tmp");
  const fs::path dst = dir / name;
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw PersistenceError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw PersistenceError("short write to " + tmp.string());
  }
  fsync_path(tmp);
  std::error_code ec;
  fs::rename(tmp, dst, ec);
  if (ec) throw PersistenceError("cannot rename " + tmp.string() + ": " + ec.message());
  fsync_path(dir);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw PersistenceError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<json> parse_lines(const std::string& content, const std::string& file) {
  std::vector<json> out;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw PersistenceError(file + ":" + std::to_string(lineno) + ": malformed record");
    }
    out.push_back(std::move(j));
  }
  return out;
}

struct Rendered {
  std::string content;
  std::int64_t records = 0;
};

Rendered render_buffer(const SessionState& s) {
  Rendered r;
  r.content = json{{"section", "header"},
                   {"format", "cranimem.buffer"},
                   {"version", kStateFormatVersion},
                   {"capacity", s.buffer.capacity()},
                   {"evicted_count", s.buffer.evicted_count()}}
                  .dump() + "\n";
  for (const auto& item : s.buffer.items()) {
    r.content += json{{"section", "item"}, {"item", item}}.dump() + "\n";
    ++r.records;
  }
  return r;
}

Rendered render_graph(const SessionState& s) {
  Rendered r;
  r.content = json{{"section", "header"},
                   {"format", "cranimem.graph"},
                   {"version", kStateFormatVersion},
                   {"next_node_id", s.graph.next_node_id()},
                   {"next_edge_id", s.graph.next_edge_id()}}
                  .dump() + "\n";
  for (const auto& [id, n] : s.graph.nodes()) {
    r.content += json{{"section", "node"}, {"node", n}}.dump() + "\n";
    ++r.records;
  }
  for (const auto& [id, e] : s.graph.edges()) {
    r.content += json{{"section", "edge"}, {"edge", e}}.dump() + "\n";
    ++r.records;
  }
  return r;
}

Rendered render_trash(const SessionState& s) {
  Rendered r;
  for (const auto& t : s.trash.entries()) {
    r.content += json(t).dump() + "\n";
    ++r.records;
  }
  return r;
}

Rendered render_consolidation(const SessionState& s) {
  Rendered r;
  for (const auto& o : s.consolidation_log) {
    r.content += json(o).dump() + "\n";
    ++r.records;
  }
  return r;
}

json manifest_json(const StateManifest& m, const SessionState& s) {
  json files = json::object();
  for (const auto& [role, f] : m.files) {
    files[role] = {{"path", f.path}, {"sha256", f.sha256}, {"records", f.records}};
  }
  return {{"format", "cranimem.state"},
          {"format_version", m.format_version},
          {"session_id", m.session_id},
          {"generation", m.generation},
          {"files", files},
          {"config", to_json(m.config)},
          {"goal", s.goal},
          {"counters", {{"turn", s.turn}, {"last_consolidation_turn", s.last_consolidation_turn}}}};
}

json read_manifest_json(const fs::path& dir) {
  const auto path = dir / kManifestName;
  if (!fs::exists(path)) throw PersistenceError("no state manifest in " + dir.string());
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw PersistenceError("manifest is not a JSON object");
  if (!j.contains("format_version") || !j.at("format_version").is_number_integer()) {
    throw VersionError("manifest has no integer format_version");
  }
  const auto version = j.at("format_version").get<std::int64_t>();
  if (version != kStateFormatVersion) {
    throw VersionError("state format version " + std::to_string(version) +
                       " is not supported (this build reads version " +
                       std::to_string(kStateFormatVersion) + ")");
  }
  return j;
}

}  // namespace

bool has_state(const fs::path& dir) { return fs::exists(dir / kManifestName); }

StateManifest read_manifest(const fs::path& dir) {
  auto j = read_manifest_json(dir);
  StateManifest m;
  try {
    m.format_version = j.at("format_version").get<std::int64_t>();
    m.session_id = j.at("session_id").get<std::string>();
    m.generation = j.at("generation").get<std::int64_t>();
    for (const auto& [role, f] : j.at("files").items()) {
      m.files[role] = {f.at("path").get<std::string>(), f.at("sha256").get<std::string>(),
                       f.at("records").get<std::int64_t>()};
    }
    m.config = config_from_json(j.at("config"));
  } catch (const json::exception& e) {
    throw PersistenceError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

StateManifest save(const SessionState& state, const fs::path& dir, const SaveOptions& options) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw PersistenceError("cannot create " + dir.string() + ": " + ec.message());

  std::optional<StateManifest> previous;
  if (has_state(dir)) {
    try {
      previous = read_manifest(dir);
    } catch (const PersistenceError&) {
      previous.reset();
    }
  }

  StateManifest m;
  m.session_id = state.session_id;
  m.generation = previous ? previous->generation + 1 : 1;
  m.config = state.config;

  const std::pair<const char*, Rendered> parts[] = {
      {"buffer", render_buffer(state)},
      {"graph", render_graph(state)},
      {"trash", render_trash(state)},
      {"consolidation", render_consolidation(state)},
  };
  for (const auto& [role, rendered] : parts) {
    const std::string name = std::string(role) + "." + std::to_string(m.generation) + ".ndjson";
    write_atomic(dir, name, rendered.content);
    m.files[role] = {name, sha256_hex(rendered.content), rendered.records};
    if (options.after_step) options.after_step(role);
  }

  write_atomic(dir, kManifestName, manifest_json(m, state).dump(2) + "\n");
  if (options.after_step) options.after_step("manifest");

  if (previous) {
    for (const auto& [role, f] : previous->files) {
      if (m.files.count(role) && m.files.at(role).path == f.path) continue;
      fs::remove(dir / f.path, ec);
    }
  }
  return m;
}

SessionState load(const fs::path& dir) {
  const auto mj = read_manifest_json(dir);
  const auto manifest = read_manifest(dir);
  for (const char* role : kRoles) {
    if (!manifest.files.count(role)) throw PersistenceError(std::string("manifest lacks the ") + role + " file");
  }

  std::map<std::string, std::vector<json>> records;
  for (const auto& [role, f] : manifest.files) {
    const auto content = read_file(dir / f.path);
    if (sha256_hex(content) != f.sha256) throw ChecksumError(f.path);
    records[role] = parse_lines(content, f.path);
  }

  SessionState s;
  try {
    s.session_id = manifest.session_id;
    s.config = manifest.config;
    s.goal = mj.at("goal").get<GoalState>();
    s.turn = mj.at("counters").at("turn").get<std::int64_t>();
    s.last_consolidation_turn = mj.at("counters").at("last_consolidation_turn").get<std::int64_t>();

    const auto& buf = records.at("buffer");
    if (buf.empty() || buf.front().value("section", "") != "header") {
      throw PersistenceError("buffer file lacks its header record");
    }
    std::vector<MemoryItem> items;
    for (std::size_t i = 1; i < buf.size(); ++i) items.push_back(buf[i].at("item").get<MemoryItem>());
    s.buffer = EpisodicBuffer::restore(buf.front().at("capacity").get<std::int64_t>(), std::move(items),
                                       buf.front().at("evicted_count").get<std::int64_t>());

    const auto& gr = records.at("graph");
    if (gr.empty() || gr.front().value("section", "") != "header") {
      throw PersistenceError("graph file lacks its header record");
    }
    std::vector<EntityNode> nodes;
    std::vector<RelationEdge> edges;
    for (std::size_t i = 1; i < gr.size(); ++i) {
      const auto section = gr[i].at("section").get<std::string>();
      if (section == "node") nodes.push_back(gr[i].at("node").get<EntityNode>());
      else if (section == "edge") edges.push_back(gr[i].at("edge").get<RelationEdge>());
      else throw PersistenceError("graph file has unknown section '" + section + "'");
    }
    s.graph = KnowledgeGraph::restore(std::move(nodes), std::move(edges),
                                      gr.front().at("next_node_id").get<NodeId>(),
                                      gr.front().at("next_edge_id").get<EdgeId>());

    std::vector<TrashEntry> trash;
    for (const auto& t : records.at("trash")) trash.push_back(t.get<TrashEntry>());
    s.trash = TrashLog::restore(std::move(trash));
    for (const auto& o : records.at("consolidation")) s.consolidation_log.push_back(o.get<ConsolidationOutcome>());
  } catch (const json::exception& e) {
    throw PersistenceError(std::string("malformed state record: ") + e.what());
  } catch (const ContractError& e) {
    throw PersistenceError(std::string("state violates buffer invariants: ") + e.what());
  } catch (const StoreCorruption& e) {
    throw PersistenceError(std::string("graph failed verification: ") + e.what());
  }
  if (s.buffer.capacity() != s.config.buffer_capacity) {
    throw PersistenceError("buffer capacity disagrees with the config snapshot");
  }
  return s;
}

}  // namespace cranimem
