#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "cranimem/config.hpp"
#include "cranimem/engine.hpp"
#include "cranimem/eval.hpp"
#include "cranimem/graph.hpp"
#include "cranimem/mock_backend.hpp"

namespace cranimem::testing {

using Rng = std::mt19937;

Vector unit(std::size_t dim, std::size_t axis);

// Canned model replies in the shapes the parsers expect.
std::string utility_json(double importance, double surprise, double emotion,
                         const std::vector<std::string>& entities = {});
std::string cortex_json(const std::string& category, double importance, double surprise, double emotion,
                        const std::vector<std::string>& entities = {});
std::string extraction_json(const std::vector<std::pair<std::string, std::string>>& typed_entities,
                            const std::vector<GraphRelation>& relations);
std::string response(const std::string& answer);

// Links nothing; isolates consolidation scoring from extraction.
class NullLinkage final : public LinkageEngine {
 public:
  UpsertReport link(const MemoryItem&, KnowledgeGraph&, std::int64_t) override { return {}; }
};

// --- random generators -------------------------------------------------

MemoryItem random_item(Rng& rng, const std::string& id, std::int64_t turn);
std::vector<MemoryItem> random_items(Rng& rng, std::size_t n);
Extraction random_extraction(Rng& rng, std::size_t name_pool = 12, std::size_t relation_pool = 4);
KnowledgeGraph random_graph(Rng& rng, std::size_t upserts);
SessionState random_session(Rng& rng, std::size_t index);
EngineConfig random_config(Rng& rng);

// --- end-to-end robustness fixture --------------------------------------
//
// Twenty records, each with its own embedding axis. Every record has one
// gold snippet "<Subject>'s <attribute> is <Answer>." early in its stream
// and three lower-utility snippets about the same subject. Question and
// gold snippet share the record's axis (reflex route); the other snippets
// sit at similarity 0.6 (cortex route); anything from another record is
// orthogonal, so cross-record distractors fall under tau_noise.
struct E2EFixture {
  std::vector<EvalRecord> records;
  std::shared_ptr<MockBackend> mock;
};

E2EFixture make_e2e_fixture();
EngineConfig e2e_config(bool gated);
EngineFactory e2e_factory(const E2EFixture& fx, bool gated);
NoiseConfig e2e_noise(std::uint64_t seed = 7);

// --- three-node chain for multi-hop retrieval ---------------------------
struct ChainFixture {
  std::vector<std::string> snippets;  // raw write stream
  std::string question;
  std::vector<std::string> question_seeds;
  std::string bridge_target;  // only reachable through the middle node
  std::shared_ptr<MockBackend> mock;
};

ChainFixture make_chain_fixture();

}  // namespace cranimem::testing
