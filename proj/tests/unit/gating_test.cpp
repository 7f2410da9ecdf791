#include <gtest/gtest.h>

#include <random>

#include "cranimem/errors.hpp"
#include "cranimem/gating.hpp"
#include "cranimem/mock_backend.hpp"
#include "fixtures.hpp"

using namespace cranimem;
using namespace cranimem::testing;

namespace {

GoalState goal(const std::string& text) { return GoalState{text, std::nullopt, 0}; }
TurnInput turn(const std::string& text, std::int64_t id = 1) { return TurnInput{"s", id, text, 0}; }

// Embedding whose cosine with axis 0 equals `sim` exactly.
Vector at_similarity(double sim) { return {sim, std::sqrt(std::max(0.0, 1.0 - sim * sim))}; }

std::uint64_t tagger_calls(const MockBackend& m) {
  return m.calls(PromptKind::ReflexUtility) + m.calls(PromptKind::CortexGating) + m.calls(PromptKind::Gating) +
         m.calls(PromptKind::UtilityTagging);
}

}  // namespace

TEST(Gate, InputEqualToGoalTakesReflexPath) {
  MockBackend m;
  m.embedding("fix the login bug", {0.3, 0.4, 0.5});
  m.script(PromptKind::ReflexUtility, "fix the login bug", utility_json(0.9, 0.3, 0.6, {"login", "Login"}));
  EngineConfig c;
  auto d = gate(turn("fix the login bug"), goal("fix the login bug"), c, m, m);
  EXPECT_NEAR(d.similarity, 1.0, 1e-12);
  EXPECT_EQ(d.route, GateRoute::Reflex);
  EXPECT_EQ(d.verdict, Verdict::Accept);
  ASSERT_TRUE(d.utility.has_value());
  EXPECT_NEAR(d.utility->base_utility, base_utility(0.9, 0.3, 0.6), 1e-9);
  EXPECT_EQ(d.entities.size(), 1u);
  EXPECT_EQ(m.calls(PromptKind::ReflexUtility), 1u);
  EXPECT_EQ(m.calls(PromptKind::CortexGating), 0u);
}

TEST(Gate, LowSimilarityRejectsWithoutTaggerCall) {
  MockBackend m;
  m.embedding("goal", at_similarity(1.0)).embedding("lunch?", at_similarity(0.10));
  auto d = gate(turn("lunch?"), goal("goal"), EngineConfig{}, m, m);
  EXPECT_EQ(d.verdict, Verdict::Reject);
  EXPECT_FALSE(d.utility.has_value());
  EXPECT_NEAR(d.similarity, 0.10, 1e-12);
  EXPECT_EQ(tagger_calls(m), 0u);
  EXPECT_EQ(m.total_chat_calls(), 0u);
}

TEST(Gate, CortexCategoriesMapToVerdicts) {
  const std::vector<std::pair<std::string, Verdict>> cases = {{"noise", Verdict::Reject},
                                                              {"goal_change", Verdict::GoalChange},
                                                              {"command", Verdict::Command},
                                                              {"relevant_context", Verdict::Accept}};
  for (const auto& [category, verdict] : cases) {
    SCOPED_TRACE(category);
    MockBackend m;
    m.embedding("goal", at_similarity(1.0)).embedding("middling", at_similarity(0.5));
    m.script(PromptKind::CortexGating, "middling", cortex_json(category, 0.5, 0.5, 0.5));
    auto d = gate(turn("middling"), goal("goal"), EngineConfig{}, m, m);
    EXPECT_EQ(d.route, GateRoute::Cortex);
    EXPECT_EQ(d.verdict, verdict);
    EXPECT_EQ(d.utility.has_value(), verdict == Verdict::Accept);
    EXPECT_EQ(m.calls(PromptKind::CortexGating), 1u);
    EXPECT_EQ(m.calls(PromptKind::ReflexUtility), 0u);
  }
}

TEST(Gate, CortexUserMessageCarriesGoalAndInput) {
  MockBackend m;
  m.embedding("goal text", at_similarity(1.0)).embedding("middling", at_similarity(0.5));
  std::string seen;
  m.responder(PromptKind::CortexGating, [&](const ChatRequest& r) {
    seen = r.user;
    EXPECT_NE(r.system.find("The vector match is LOW"), std::string::npos);
    return cortex_json("noise", 0, 0, 0);
  });
  gate(turn("middling"), goal("goal text"), EngineConfig{}, m, m);
  EXPECT_NE(seen.find("goal text"), std::string::npos);
  EXPECT_NE(seen.find("middling"), std::string::npos);
}

TEST(Gate, ModelBaseUtilityIsNeverTrusted) {
  MockBackend m;
  m.embedding("g", at_similarity(1.0));
  m.script(PromptKind::ReflexUtility, "g",
           R"({"importance":0.1,"surprise":0.2,"emotion":0.3,"base_utility":0.99,"entities":[]})");
  auto d = gate(turn("g"), goal("g"), EngineConfig{}, m, m);
  EXPECT_NEAR(d.utility->base_utility, 0.2, 1e-9);
}

TEST(Gate, FailuresBecomeGateError) {
  {
    MockBackend m;
    m.embedding("g", at_similarity(1.0));
    m.script(PromptKind::ReflexUtility, "g", "I'd rather not.");
    try {
      gate(turn("g"), goal("g"), EngineConfig{}, m, m);
      FAIL();
    } catch (const GateError& e) {
      EXPECT_EQ(e.raw(), "I'd rather not.");
      EXPECT_FALSE(e.backend_unavailable());
    }
  }
  {
    MockBackend m;
    m.embedding("g", at_similarity(1.0)).fail(PromptKind::ReflexUtility);
    try {
      gate(turn("g"), goal("g"), EngineConfig{}, m, m);
      FAIL();
    } catch (const GateError& e) {
      EXPECT_TRUE(e.backend_unavailable());
    }
  }
  {
    MockBackend m;
    m.fail_embeddings();
    EXPECT_THROW(gate(turn("g"), goal("g"), EngineConfig{}, m, m), GateError);
  }
  {
    MockBackend m;
    m.embedding("g", at_similarity(1.0)).embedding("mid", at_similarity(0.5));
    m.script(PromptKind::CortexGating, "mid", cortex_json("gossip", 0, 0, 0));
    EXPECT_THROW(gate(turn("mid"), goal("g"), EngineConfig{}, m, m), GateError);
  }
}

TEST(Gate, DisabledGateTagsEverythingThroughReflex) {
  MockBackend m;
  m.embedding("g", at_similarity(1.0)).embedding("far", at_similarity(0.0));
  m.script(PromptKind::ReflexUtility, "far", utility_json(0.1, 0.1, 0.1));
  EngineConfig c;
  c.gate_enabled = false;
  auto d = gate(turn("far"), goal("g"), c, m, m);
  EXPECT_EQ(d.verdict, Verdict::Accept);
  EXPECT_EQ(d.route, GateRoute::Reflex);
}

TEST(Gate, PriorityProfile) {
  MockBackend m;
  m.embedding("g", at_similarity(1.0)).embedding("a", at_similarity(0.9)).embedding("b", at_similarity(0.5));
  m.script(PromptKind::Gating, "a", R"({"is_noise":false,"priority_score":8,"entities":["X"],"reasoning":"on task"})");
  m.script(PromptKind::UtilityTagging, "a", utility_json(0.8, 0.1, 0.1, {"Y"}));
  m.script(PromptKind::Gating, "b", R"({"is_noise":true,"priority_score":1,"entities":[],"reasoning":"chatter"})");
  EngineConfig c;
  c.gate_profile = GateProfile::Priority;
  auto a = gate(turn("a"), goal("g"), c, m, m);
  EXPECT_EQ(a.verdict, Verdict::Accept);
  EXPECT_EQ(a.route, GateRoute::Reflex);
  EXPECT_EQ(a.entities.size(), 2u);
  auto b = gate(turn("b"), goal("g"), c, m, m);
  EXPECT_EQ(b.verdict, Verdict::Reject);
  EXPECT_EQ(m.calls(PromptKind::UtilityTagging), 1u);
}

TEST(Gate, SoundnessOverRandomTurns) {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MockBackend m;
  m.embedding("goal", at_similarity(1.0));
  m.responder(PromptKind::ReflexUtility, [](const ChatRequest&) { return utility_json(0.5, 0.5, 0.5); });
  m.responder(PromptKind::CortexGating, [](const ChatRequest& r) {
    return cortex_json(r.subject.size() % 2 ? "relevant_context" : "noise", 0.5, 0.5, 0.5);
  });
  EngineConfig c;
  std::uint64_t expected_taggers = 0;
  for (int i = 0; i < 300; ++i) {
    const double sim = u(rng);
    const std::string text = "turn " + std::to_string(i);
    m.embedding(text, at_similarity(sim));
    auto d = gate(turn(text, i + 1), goal("goal"), c, m, m);
    if (sim >= c.tau_noise) ++expected_taggers;
    if (d.similarity < c.tau_noise) EXPECT_NE(d.verdict, Verdict::Accept);
    if (sim >= c.tau_reflex) EXPECT_EQ(d.route, GateRoute::Reflex);
    if (d.verdict == Verdict::Accept) EXPECT_NEAR(d.utility->base_utility, 0.5, 1e-9);
  }
  EXPECT_EQ(tagger_calls(m), expected_taggers);
}

TEST(Gate, ReflexPathNeverIssuesCortexRequest) {
  MockBackend m;
  m.embedding("g", at_similarity(1.0));
  m.responder(PromptKind::ReflexUtility, [](const ChatRequest&) { return utility_json(0.5, 0.5, 0.5); });
  for (int i = 0; i < 50; ++i) {
    const std::string t = "hot " + std::to_string(i);
    m.embedding(t, at_similarity(0.75 + 0.25 * i / 50.0));
    gate(turn(t), goal("g"), EngineConfig{}, m, m);
  }
  EXPECT_EQ(m.calls(PromptKind::CortexGating), 0u);
  EXPECT_EQ(m.calls(PromptKind::ReflexUtility), 50u);
}

TEST(Gate, DeterministicVerdicts) {
  MockBackend m;
  m.embedding("g", at_similarity(1.0)).embedding("mid", at_similarity(0.6));
  m.script(PromptKind::CortexGating, "mid", cortex_json("relevant_context", 0.7, 0.2, 0.4, {"A"}));
  auto a = gate(turn("mid"), goal("g"), EngineConfig{}, m, m);
  auto b = gate(turn("mid"), goal("g"), EngineConfig{}, m, m);
  EXPECT_EQ(a.verdict, b.verdict);
  EXPECT_EQ(a.utility, b.utility);
  EXPECT_EQ(a.similarity, b.similarity);
  EXPECT_EQ(a.entities, b.entities);
}

TEST(GoalChange, UpdatesGoalAndClearsCache) {
  GoalState g{"old goal", Vector{1.0, 0.0}, 2};
  GateDecision d;
  d.verdict = Verdict::GoalChange;
  auto next = apply_goal_change(g, d, turn("now plan the offsite", 7));
  EXPECT_EQ(next.goal_text, "now plan the offsite");
  EXPECT_EQ(next.updated_at_turn, 7);
  EXPECT_FALSE(next.goal_embedding.has_value());
  d.verdict = Verdict::Accept;
  EXPECT_THROW(apply_goal_change(g, d, turn("x", 8)), ContractError);
}

TEST(GoalChange, EmbeddingIsCachedOnce) {
  MockBackend m;
  m.embedding("g", at_similarity(1.0));
  GoalState g = goal("g");
  ensure_goal_embedding(g, m);
  ensure_goal_embedding(g, m);
  EXPECT_EQ(m.embed_calls(), 1u);
  EXPECT_TRUE(g.goal_embedding.has_value());
}
