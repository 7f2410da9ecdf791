#include "cranimem/graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "cranimem/errors.hpp"
#include "cranimem/structured.hpp"
#include "cranimem/text.hpp"

namespace cranimem {

namespace {

constexpr std::pair<EntityType, const char*> kTypeNames[] = {
    {EntityType::Project, "Project"}, {EntityType::Issue, "Issue"},
    {EntityType::Task, "Task"},       {EntityType::Person, "Person"},
    {EntityType::Tool, "Tool"},       {EntityType::Feature, "Feature"},
    {EntityType::Location, "Location"}, {EntityType::Date, "Date"},
    {EntityType::Other, "Other"},
};

void add_source(std::vector<std::string>& sources, const std::string& id) {
  if (std::find(sources.begin(), sources.end(), id) == sources.end()) sources.push_back(id);
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

const char* to_string(EntityType type) {
  for (const auto& [t, name] : kTypeNames) {
    if (t == type) return name;
  }
  return "Other";
}

bool is_known_entity_type(const std::string& s) {
  const auto n = normalize_name(s);
  for (const auto& [t, name] : kTypeNames) {
    if (normalize_name(name) == n) return true;
  }
  return false;
}

EntityType entity_type_from_string(const std::string& s) {
  const auto n = normalize_name(s);
  for (const auto& [t, name] : kTypeNames) {
    if (normalize_name(name) == n) return t;
  }
  return EntityType::Other;
}

std::string GraphFact::rendered() const {
  return source + " —" + relation + "→ " + target + " (x" + std::to_string(reinforcement) +
         ", hop " + std::to_string(hop) + ")";
}

Extraction validate_extraction(const std::vector<GraphEntity>& entities,
                               const std::vector<GraphRelation>& relations) {
  Extraction out;
  std::set<std::pair<std::string, EntityType>> seen;
  std::set<std::string> names;
  for (const auto& e : entities) {
    auto name = trim(e.name);
    auto key = normalize_name(name);
    if (key.empty()) {
      out.warnings.push_back("dropped entity with empty name");
      continue;
    }
    if (!seen.insert({key, e.type}).second) continue;
    names.insert(key);
    out.entities.push_back({name, e.type});
  }
  for (const auto& r : relations) {
    const auto src = normalize_name(r.source);
    const auto dst = normalize_name(r.target);
    const auto rel = normalize_name(r.relation);
    if (!names.count(src) || !names.count(dst)) {
      out.warnings.push_back("dropped relation '" + r.source + " " + r.relation + " " + r.target +
                             "': endpoint not in entity list");
      continue;
    }
    if (rel.empty()) {
      out.warnings.push_back("dropped relation with empty verb phrase");
      continue;
    }
    out.relations.push_back({trim(r.source), rel, trim(r.target)});
  }
  for (const auto& w : out.warnings) spdlog::warn("extraction: {}", w);
  return out;
}

Extraction extract(const std::string& snippet, ChatBackend& chat) {
  if (trim(snippet).empty()) throw ContractError("extract needs a non-empty snippet");
  ChatRequest req{PromptKind::RelationExtraction,
                  fill_template(prompt_template(PromptKind::RelationExtraction), {}), snippet,
                  snippet};
  const std::string raw = chat.chat(req);
  ExtractionOutput parsed;
  try {
    parsed = parse_extraction(raw);
  } catch (const ParseError& e) {
    throw ExtractionError(std::string("unusable extraction output: ") + e.what(), raw);
  }
  std::vector<GraphEntity> entities;
  std::vector<std::string> type_warnings;
  for (const auto& e : parsed.entities) {
    if (!is_known_entity_type(e.type)) type_warnings.push_back("unknown entity type '" + e.type + "' mapped to Other");
    entities.push_back({e.name, entity_type_from_string(e.type)});
  }
  std::vector<GraphRelation> relations;
  for (const auto& r : parsed.relations) relations.push_back({r.source, r.relation, r.target});
  auto out = validate_extraction(entities, relations);
  out.warnings.insert(out.warnings.end(), type_warnings.begin(), type_warnings.end());
  return out;
}

void KnowledgeGraph::index_node(const EntityNode& n) {
  const auto key = normalize_name(n.name);
  key_index_[{key, n.entity_type}] = n.node_id;
  name_index_[key].push_back(n.node_id);
}

void KnowledgeGraph::unindex_node(const EntityNode& n) {
  const auto key = normalize_name(n.name);
  key_index_.erase({key, n.entity_type});
  auto it = name_index_.find(key);
  if (it != name_index_.end()) {
    std::erase(it->second, n.node_id);
    if (it->second.empty()) name_index_.erase(it);
  }
}

void KnowledgeGraph::index_edge(const RelationEdge& e) {
  triple_index_[{e.source_node_id, e.relation, e.target_node_id}] = e.edge_id;
  adjacency_[e.source_node_id].push_back(e.edge_id);
  if (e.target_node_id != e.source_node_id) adjacency_[e.target_node_id].push_back(e.edge_id);
}

void KnowledgeGraph::unindex_edge(const RelationEdge& e) {
  triple_index_.erase({e.source_node_id, e.relation, e.target_node_id});
  for (NodeId n : {e.source_node_id, e.target_node_id}) {
    auto it = adjacency_.find(n);
    if (it == adjacency_.end()) continue;
    std::erase(it->second, e.edge_id);
    if (it->second.empty()) adjacency_.erase(it);
  }
}

UpsertReport KnowledgeGraph::upsert(const Extraction& extraction, const std::string& source_item_id,
                                    std::int64_t turn) {
  // Resolve relation endpoints against the extraction's own entity list
  // before touching anything, so a bad input leaves the graph as it was.
  std::map<std::string, EntityType> type_of;
  for (const auto& e : extraction.entities) type_of.emplace(normalize_name(e.name), e.type);
  for (const auto& r : extraction.relations) {
    if (!type_of.count(normalize_name(r.source)) || !type_of.count(normalize_name(r.target))) {
      throw ContractError("upsert relation '" + r.relation + "' references an entity outside the extraction");
    }
  }

  Journal journal;
  journal.next_node_id = next_node_id_;
  journal.next_edge_id = next_edge_id_;
  UpsertReport report;
  std::set<NodeId> asserted_nodes;
  std::set<EdgeId> asserted_edges;

  try {
    for (const auto& e : extraction.entities) {
      const NodeKey key{normalize_name(e.name), e.type};
      if (key.first.empty()) continue;
      auto it = key_index_.find(key);
      if (it != key_index_.end()) {
        if (!asserted_nodes.insert(it->second).second) continue;
        auto& node = nodes_.at(it->second);
        journal.prior_nodes.push_back(node);
        ++node.reinforcement;
        node.last_seen_turn = std::max(node.last_seen_turn, turn);
        add_source(node.source_item_ids, source_item_id);
        report.reinforced_nodes.push_back(node.node_id);
      } else {
        EntityNode node;
        node.node_id = next_node_id_++;
        node.name = trim(e.name);
        node.entity_type = e.type;
        node.reinforcement = 1;
        node.first_seen_turn = turn;
        node.last_seen_turn = turn;
        node.source_item_ids = {source_item_id};
        journal.created_nodes.push_back(node.node_id);
        asserted_nodes.insert(node.node_id);
        index_node(node);
        report.created_nodes.push_back(node.node_id);
        nodes_.emplace(node.node_id, std::move(node));
      }
    }

    for (const auto& r : extraction.relations) {
      const auto src_key = normalize_name(r.source);
      const auto dst_key = normalize_name(r.target);
      const NodeId src = key_index_.at({src_key, type_of.at(src_key)});
      const NodeId dst = key_index_.at({dst_key, type_of.at(dst_key)});
      const auto relation = normalize_name(r.relation);
      if (relation.empty()) continue;
      const TripleKey key{src, relation, dst};
      auto it = triple_index_.find(key);
      if (it != triple_index_.end()) {
        if (!asserted_edges.insert(it->second).second) continue;
        auto& edge = edges_.at(it->second);
        journal.prior_edges.push_back(edge);
        ++edge.reinforcement;
        add_source(edge.source_item_ids, source_item_id);
        report.reinforced_edges.push_back(edge.edge_id);
      } else {
        RelationEdge edge;
        edge.edge_id = next_edge_id_++;
        edge.source_node_id = src;
        edge.target_node_id = dst;
        edge.relation = relation;
        edge.reinforcement = 1;
        edge.source_item_ids = {source_item_id};
        journal.created_edges.push_back(edge.edge_id);
        asserted_edges.insert(edge.edge_id);
        index_edge(edge);
        report.created_edges.push_back(edge.edge_id);
        edges_.emplace(edge.edge_id, std::move(edge));
      }
    }
    verify_touched(report);
  } catch (...) {
    rollback(journal);
    throw;
  }
  return report;
}

void KnowledgeGraph::rollback(const Journal& journal) {
  for (auto it = journal.created_edges.rbegin(); it != journal.created_edges.rend(); ++it) {
    if (auto e = edges_.find(*it); e != edges_.end()) {
      unindex_edge(e->second);
      edges_.erase(e);
    }
  }
  for (auto it = journal.created_nodes.rbegin(); it != journal.created_nodes.rend(); ++it) {
    if (auto n = nodes_.find(*it); n != nodes_.end()) {
      unindex_node(n->second);
      nodes_.erase(n);
    }
  }
  for (const auto& prior : journal.prior_nodes) nodes_[prior.node_id] = prior;
  for (const auto& prior : journal.prior_edges) edges_[prior.edge_id] = prior;
  next_node_id_ = journal.next_node_id;
  next_edge_id_ = journal.next_edge_id;
}

void KnowledgeGraph::verify_touched(const UpsertReport& report) const {
  auto check_node = [&](NodeId id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw StoreCorruption("node " + std::to_string(id) + " missing after upsert");
    const auto& n = it->second;
    const auto key = normalize_name(n.name);
    auto k = key_index_.find({key, n.entity_type});
    if (k == key_index_.end() || k->second != id) {
      throw StoreCorruption("key index disagrees with node " + std::to_string(id));
    }
    auto names = name_index_.find(key);
    if (names == name_index_.end() ||
        std::find(names->second.begin(), names->second.end(), id) == names->second.end()) {
      throw StoreCorruption("name index is missing node " + std::to_string(id));
    }
    if (n.reinforcement < 1) throw StoreCorruption("node " + std::to_string(id) + " has reinforcement < 1");
  };
  auto check_edge = [&](EdgeId id) {
    auto it = edges_.find(id);
    if (it == edges_.end()) throw StoreCorruption("edge " + std::to_string(id) + " missing after upsert");
    const auto& e = it->second;
    if (!nodes_.count(e.source_node_id) || !nodes_.count(e.target_node_id)) {
      throw StoreCorruption("edge " + std::to_string(id) + " has a dangling endpoint");
    }
    auto t = triple_index_.find({e.source_node_id, e.relation, e.target_node_id});
    if (t == triple_index_.end() || t->second != id) {
      throw StoreCorruption("triple index disagrees with edge " + std::to_string(id));
    }
    for (NodeId n : {e.source_node_id, e.target_node_id}) {
      auto adj = adjacency_.find(n);
      if (adj == adjacency_.end() || std::find(adj->second.begin(), adj->second.end(), id) == adj->second.end()) {
        throw StoreCorruption("adjacency index is missing edge " + std::to_string(id));
      }
    }
  };
  for (auto id : report.created_nodes) check_node(id);
  for (auto id : report.reinforced_nodes) check_node(id);
  for (auto id : report.created_edges) check_edge(id);
  for (auto id : report.reinforced_edges) check_edge(id);
}

void KnowledgeGraph::verify() const {
  UpsertReport all;
  for (const auto& [id, n] : nodes_) {
    if (n.node_id != id) throw StoreCorruption("node record id mismatch at " + std::to_string(id));
    if (id >= next_node_id_) throw StoreCorruption("node id beyond allocator");
    all.created_nodes.push_back(id);
  }
  for (const auto& [id, e] : edges_) {
    if (e.edge_id != id) throw StoreCorruption("edge record id mismatch at " + std::to_string(id));
    if (id >= next_edge_id_) throw StoreCorruption("edge id beyond allocator");
    if (e.reinforcement < 1) throw StoreCorruption("edge " + std::to_string(id) + " has reinforcement < 1");
    all.created_edges.push_back(id);
  }
  verify_touched(all);

  if (key_index_.size() != nodes_.size()) throw StoreCorruption("key index size differs from node count");
  std::size_t named = 0;
  for (const auto& [key, ids] : name_index_) {
    for (NodeId id : ids) {
      auto it = nodes_.find(id);
      if (it == nodes_.end() || normalize_name(it->second.name) != key) {
        throw StoreCorruption("name index entry '" + key + "' points at a wrong node");
      }
    }
    named += ids.size();
  }
  if (named != nodes_.size()) throw StoreCorruption("name index size differs from node count");
  if (triple_index_.size() != edges_.size()) throw StoreCorruption("triple index size differs from edge count");
  std::size_t expected_adjacency = 0;
  for (const auto& [id, e] : edges_) expected_adjacency += e.source_node_id == e.target_node_id ? 1 : 2;
  std::size_t adjacency = 0;
  for (const auto& [node, list] : adjacency_) {
    if (!nodes_.count(node)) throw StoreCorruption("adjacency entry for missing node");
    adjacency += list.size();
  }
  if (adjacency != expected_adjacency) throw StoreCorruption("adjacency index size differs from edge incidences");
}

std::vector<NodeId> KnowledgeGraph::find(const std::string& name) const {
  auto it = name_index_.find(normalize_name(name));
  if (it == name_index_.end()) return {};
  auto ids = it->second;
  std::sort(ids.begin(), ids.end());
  return ids;
}

const EntityNode* KnowledgeGraph::node(NodeId id) const {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : &it->second;
}

const RelationEdge* KnowledgeGraph::edge(EdgeId id) const {
  auto it = edges_.find(id);
  return it == edges_.end() ? nullptr : &it->second;
}

std::vector<GraphFact> KnowledgeGraph::traverse(const std::vector<std::string>& seed_entities,
                                                std::int64_t max_hops, std::size_t top_k) const {
  if (max_hops < 1) throw DomainError("max_hops", "must be >= 1");
  std::set<NodeId> frontier;
  for (const auto& s : seed_entities) {
    for (NodeId id : find(s)) frontier.insert(id);
  }
  std::unordered_set<NodeId> visited(frontier.begin(), frontier.end());
  std::unordered_set<EdgeId> collected;
  std::vector<GraphFact> facts;

  for (std::int64_t hop = 1; hop <= max_hops && !frontier.empty(); ++hop) {
    std::set<NodeId> next;
    for (NodeId n : frontier) {
      auto adj = adjacency_.find(n);
      if (adj == adjacency_.end()) continue;
      for (EdgeId eid : adj->second) {
        if (!collected.insert(eid).second) continue;
        const auto& e = edges_.at(eid);
        facts.push_back({eid, nodes_.at(e.source_node_id).name, e.relation,
                         nodes_.at(e.target_node_id).name, e.reinforcement, hop});
        const NodeId other = e.source_node_id == n ? e.target_node_id : e.source_node_id;
        if (visited.insert(other).second) next.insert(other);
      }
    }
    frontier = std::move(next);
  }

  std::sort(facts.begin(), facts.end(), [](const GraphFact& a, const GraphFact& b) {
    if (a.hop != b.hop) return a.hop < b.hop;
    if (a.reinforcement != b.reinforcement) return a.reinforcement > b.reinforcement;
    return a.edge_id < b.edge_id;
  });
  if (facts.size() > top_k) facts.resize(top_k);
  return facts;
}

std::string KnowledgeGraph::export_dot() const {
  std::ostringstream out;
  out << "digraph knowledge_graph {\n";
  for (const auto& [id, n] : nodes_) {
    out << "  n" << id << " [label=\"" << dot_escape(n.name) << "\", type=\"" << to_string(n.entity_type)
        << "\", reinforcement=" << n.reinforcement << "];\n";
  }
  for (const auto& [id, e] : edges_) {
    out << "  n" << e.source_node_id << " -> n" << e.target_node_id << " [label=\""
        << dot_escape(e.relation) << "\", reinforcement=" << e.reinforcement << "];\n";
  }
  out << "}\n";
  return out.str();
}

KnowledgeGraph KnowledgeGraph::restore(std::vector<EntityNode> nodes, std::vector<RelationEdge> edges,
                                       NodeId next_node_id, EdgeId next_edge_id) {
  KnowledgeGraph g;
  g.next_node_id_ = next_node_id;
  g.next_edge_id_ = next_edge_id;
  for (auto& n : nodes) {
    if (g.nodes_.count(n.node_id)) throw StoreCorruption("duplicate node id " + std::to_string(n.node_id));
    if (g.key_index_.count({normalize_name(n.name), n.entity_type})) {
      throw StoreCorruption("duplicate node key '" + n.name + "'");
    }
    g.index_node(n);
    g.nodes_.emplace(n.node_id, std::move(n));
  }
  for (auto& e : edges) {
    if (g.edges_.count(e.edge_id)) throw StoreCorruption("duplicate edge id " + std::to_string(e.edge_id));
    if (g.triple_index_.count({e.source_node_id, e.relation, e.target_node_id})) {
      throw StoreCorruption("duplicate relation triple for edge " + std::to_string(e.edge_id));
    }
    g.index_edge(e);
    g.edges_.emplace(e.edge_id, std::move(e));
  }
  g.verify();
  return g;
}

}  // namespace cranimem
