#include <gtest/gtest.h>

#include "cranimem/errors.hpp"
#include "cranimem/mock_backend.hpp"
#include "cranimem/offline_backend.hpp"
#include "cranimem/prompts.hpp"
#include "fixtures.hpp"

using namespace cranimem;
using cranimem::testing::unit;

TEST(Mock, ScriptedPairReturnsExactText) {
  MockBackend m;
  m.script(PromptKind::ReflexUtility, "hello", "canned {text}");
  EXPECT_EQ(m.chat({PromptKind::ReflexUtility, "sys", "hello", "hello"}), "canned {text}");
  EXPECT_EQ(m.calls(PromptKind::ReflexUtility), 1u);
  EXPECT_EQ(m.total_chat_calls(), 1u);
}

TEST(Mock, MissIsLoud) {
  MockBackend m;
  EXPECT_THROW(m.chat({PromptKind::Reasoning, "", "", "unscripted"}), MockMiss);
  EXPECT_THROW(m.embed({"unknown text"}), MockMiss);
}

TEST(Mock, ScriptBeatsResponder) {
  MockBackend m;
  m.script(PromptKind::Reasoning, "a", "scripted");
  m.responder(PromptKind::Reasoning, [](const ChatRequest& r) { return "responder:" + r.subject; });
  EXPECT_EQ(m.chat({PromptKind::Reasoning, "", "", "a"}), "scripted");
  EXPECT_EQ(m.chat({PromptKind::Reasoning, "", "", "b"}), "responder:b");
}

TEST(Mock, FailingKindsRaiseBackendUnavailable) {
  MockBackend m;
  m.fail(PromptKind::CortexGating).fail_embeddings();
  EXPECT_THROW(m.chat({PromptKind::CortexGating, "", "", "x"}), BackendUnavailable);
  EXPECT_THROW(m.embed({"x"}), BackendUnavailable);
}

TEST(Mock, EmbeddingsNormalizedDeterministicOrderPreserving) {
  MockBackend m;
  m.embedding("a", {3.0, 4.0}).embedding("b", {0.0, 2.0}).embedding("c", {-1.0, 0.0});
  auto v = m.embed({"a"});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NEAR(v[0][0], 0.6, 1e-12);
  EXPECT_NEAR(v[0][1], 0.8, 1e-12);
  EXPECT_EQ(m.embed({"a"}), m.embed({"a"}));

  std::vector<std::string> order = {"c", "a", "b", "a"};
  auto batch = m.embed(order);
  ASSERT_EQ(batch.size(), order.size());
  for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(batch[i], m.embed({order[i]})[0]);
}

TEST(Metered, RecordsEveryCallIncludingFailures) {
  auto mock = std::make_shared<MockBackend>();
  mock->script(PromptKind::Reasoning, "q", "<RESPONSE>x</RESPONSE>").embedding("q", {1.0});
  mock->fail(PromptKind::Gating);
  auto log = std::make_shared<CallLog>();
  auto b = metered(Backends{mock, mock}, log);
  b.chat->chat({PromptKind::Reasoning, "", "", "q"});
  b.embed->embed({"q"});
  EXPECT_THROW(b.chat->chat({PromptKind::Gating, "", "", "q"}), BackendUnavailable);
  auto calls = log->snapshot();
  ASSERT_EQ(calls.size(), 3u);
  EXPECT_EQ(calls[0].operation, "reasoning");
  EXPECT_EQ(calls[1].operation, "embed");
  EXPECT_EQ(calls[2].operation, "gating");
  for (const auto& c : calls) EXPECT_GE(c.latency_ms, 0.0);
}

TEST(Offline, DeterministicUnitEmbeddings) {
  OfflineBackend b;
  auto v = b.embed({"Project Apollo ships Friday", "Project Apollo ships Friday", "unrelated lunch menu"});
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0], v[1]);
  EXPECT_NEAR(l2_norm(v[0]), 1.0, 1e-12);
  EXPECT_LT(cosine_similarity(v[0], v[2]), 0.5);
}

TEST(Offline, AnswersEveryPromptKindInParseableShape) {
  OfflineBackend b;
  const std::string text = "Sarah Chen uses Tool Forge on Project Alpha.";
  for (auto kind : kAllPromptKinds) {
    SCOPED_TRACE(to_string(kind));
    const auto out = b.chat({kind, "", "CONTEXT:\n" + text + "\n\nUSER INPUT:\nWhat does Sarah Chen use?", text});
    EXPECT_FALSE(out.empty());
  }
}

TEST(Offline, CapitalizedRuns) {
  auto runs = capitalized_runs("Yesterday Sarah Chen met Bob at Project Alpha 2 in Oslo.");
  EXPECT_NE(std::find(runs.begin(), runs.end(), "Sarah Chen"), runs.end());
  EXPECT_NE(std::find(runs.begin(), runs.end(), "Oslo"), runs.end());
}
