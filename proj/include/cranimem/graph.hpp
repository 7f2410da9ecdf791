#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cranimem/backends.hpp"

namespace cranimem {

enum class EntityType { Project, Issue, Task, Person, Tool, Feature, Location, Date, Other };

const char* to_string(EntityType type);
// Case-insensitive; anything outside the extraction schema maps to Other.
EntityType entity_type_from_string(const std::string& s);
bool is_known_entity_type(const std::string& s);

using NodeId = std::uint64_t;
using EdgeId = std::uint64_t;

struct EntityNode {
  NodeId node_id = 0;
  std::string name;  // first spelling seen
  EntityType entity_type = EntityType::Other;
  std::int64_t reinforcement = 1;
  std::int64_t first_seen_turn = 0;
  std::int64_t last_seen_turn = 0;
  std::vector<std::string> source_item_ids;

  bool operator==(const EntityNode&) const = default;
};

struct RelationEdge {
  EdgeId edge_id = 0;
  NodeId source_node_id = 0;
  NodeId target_node_id = 0;
  std::string relation;  // normalized verb phrase
  std::int64_t reinforcement = 1;
  std::vector<std::string> source_item_ids;

  bool operator==(const RelationEdge&) const = default;
};

struct GraphEntity {
  std::string name;
  EntityType type = EntityType::Other;
};

struct GraphRelation {
  std::string source;
  std::string relation;
  std::string target;
};

struct Extraction {
  std::vector<GraphEntity> entities;
  std::vector<GraphRelation> relations;
  std::vector<std::string> warnings;
};

// Runs the relation-extraction prompt and validates the result: relations
// naming an entity that is not in the entity list are dropped with a warning.
// Throws ExtractionError on unparseable output.
Extraction extract(const std::string& snippet, ChatBackend& chat);

// Validation half of extract(), usable on already-parsed output.
Extraction validate_extraction(const std::vector<GraphEntity>& entities,
                               const std::vector<GraphRelation>& relations);

struct UpsertReport {
  std::vector<NodeId> created_nodes;
  std::vector<NodeId> reinforced_nodes;
  std::vector<EdgeId> created_edges;
  std::vector<EdgeId> reinforced_edges;

  bool empty() const {
    return created_nodes.empty() && reinforced_nodes.empty() && created_edges.empty() &&
           reinforced_edges.empty();
  }
};

struct GraphFact {
  EdgeId edge_id = 0;
  std::string source;
  std::string relation;
  std::string target;
  std::int64_t reinforcement = 0;
  std::int64_t hop = 0;

  // "source —relation→ target (xN, hop H)"
  std::string rendered() const;
  bool operator==(const GraphFact&) const = default;
};

inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

class KnowledgeGraph {
 public:
  // Merge key for nodes is (normalized name, type); for edges the
  // (source node, normalized relation, target node) triple. Re-asserted
  // facts bump reinforcement instead of adding records. On an index
  // inconsistency the mutation is rolled back and StoreCorruption thrown.
  UpsertReport upsert(const Extraction& extraction, const std::string& source_item_id,
                      std::int64_t turn);

  // Undirected breadth-first expansion from every node whose normalized
  // name matches a seed. Ordered by hop, then reinforcement descending,
  // then edge id.
  std::vector<GraphFact> traverse(const std::vector<std::string>& seed_entities,
                                  std::int64_t max_hops, std::size_t top_k) const;

  // Full consistency check of indices against records; throws StoreCorruption.
  void verify() const;

  std::vector<NodeId> find(const std::string& name) const;
  const EntityNode* node(NodeId id) const;
  const RelationEdge* edge(EdgeId id) const;

  const std::map<NodeId, EntityNode>& nodes() const noexcept { return nodes_; }
  const std::map<EdgeId, RelationEdge>& edges() const noexcept { return edges_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  NodeId next_node_id() const noexcept { return next_node_id_; }
  EdgeId next_edge_id() const noexcept { return next_edge_id_; }

  // Graphviz DOT: node list followed by labeled edge list.
  std::string export_dot() const;

  static KnowledgeGraph restore(std::vector<EntityNode> nodes, std::vector<RelationEdge> edges,
                                NodeId next_node_id, EdgeId next_edge_id);

  bool operator==(const KnowledgeGraph& other) const {
    return nodes_ == other.nodes_ && edges_ == other.edges_ &&
           next_node_id_ == other.next_node_id_ && next_edge_id_ == other.next_edge_id_;
  }

 private:
  friend struct KnowledgeGraphTestPeer;

  using NodeKey = std::pair<std::string, EntityType>;
  using TripleKey = std::tuple<NodeId, std::string, NodeId>;

  struct Journal {
    std::vector<NodeId> created_nodes;
    std::vector<EdgeId> created_edges;
    std::vector<EntityNode> prior_nodes;
    std::vector<RelationEdge> prior_edges;
    NodeId next_node_id = 0;
    EdgeId next_edge_id = 0;
  };

  void index_node(const EntityNode& n);
  void unindex_node(const EntityNode& n);
  void index_edge(const RelationEdge& e);
  void unindex_edge(const RelationEdge& e);
  void verify_touched(const UpsertReport& report) const;
  void rollback(const Journal& journal);

  std::map<NodeId, EntityNode> nodes_;
  std::map<EdgeId, RelationEdge> edges_;
  std::map<NodeKey, NodeId> key_index_;
  std::unordered_map<std::string, std::vector<NodeId>> name_index_;
  std::map<TripleKey, EdgeId> triple_index_;
  std::unordered_map<NodeId, std::vector<EdgeId>> adjacency_;
  NodeId next_node_id_ = 1;
  EdgeId next_edge_id_ = 1;
};

}  // namespace cranimem
