#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cranimem/core.hpp"
#include "cranimem/errors.hpp"
#include "cranimem/text.hpp"

using namespace cranimem;

TEST(BaseUtility, MeanOfComponents) {
  EXPECT_DOUBLE_EQ(base_utility(1.0, 1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(base_utility(0.0, 0.0, 0.0), 0.0);
  EXPECT_NEAR(base_utility(0.3, 0.6, 0.9), 0.6, 1e-12);
}

TEST(BaseUtility, RejectsOutOfRangeNamingTheField) {
  try {
    base_utility(0.5, 1.5, 0.5);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_EQ(e.field(), "surprise");
  }
  EXPECT_THROW(base_utility(-0.1, 0.5, 0.5), DomainError);
  EXPECT_THROW(base_utility(0.5, 0.5, std::nan("")), DomainError);
}

TEST(BaseUtility, PermutationInvariant) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    double a = u(rng), b = u(rng), c = u(rng);
    const double ref = base_utility(a, b, c);
    EXPECT_NEAR(base_utility(b, c, a), ref, 1e-15);
    EXPECT_NEAR(base_utility(c, a, b), ref, 1e-15);
    EXPECT_NEAR(base_utility(b, a, c), ref, 1e-15);
    EXPECT_NEAR(base_utility(a, c, b), ref, 1e-15);
    EXPECT_NEAR(base_utility(c, b, a), ref, 1e-15);
  }
}

TEST(UtilityScores, FromDerivesBase) {
  auto u = UtilityScores::from(0.2, 0.4, 0.9);
  EXPECT_NEAR(u.base_utility, 0.5, 1e-12);
}

namespace {
MemoryItem with_base(double b) {
  MemoryItem m;
  m.item_id = "x";
  m.utility = UtilityScores{b, b, b, b};
  return m;
}
}  // namespace

TEST(ReplayScore, Examples) {
  EXPECT_DOUBLE_EQ(replay_score(with_base(0.6), 0.0, 0.5), 0.6);
  EXPECT_NEAR(replay_score(with_base(0.6), 2.0, 0.5), 1.2, 1e-12);
  EXPECT_DOUBLE_EQ(replay_score(with_base(0.0), 2.7, 0.5), 0.0);
}

TEST(ReplayScore, ValidatesArguments) {
  EXPECT_THROW(replay_score(with_base(0.5), -1.0, 0.5), DomainError);
  EXPECT_THROW(replay_score(with_base(0.5), 1.0, -0.5), DomainError);
}

TEST(ReplayScore, MonotoneInEachArgument) {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double b = u(rng), fb = 3 * u(rng), a = 2 * u(rng), d = u(rng) * 0.3;
    const double ref = replay_score(with_base(b), fb, a);
    EXPECT_LE(ref, replay_score(with_base(std::min(1.0, b + d)), fb, a) + 1e-15);
    EXPECT_LE(ref, replay_score(with_base(b), fb + d, a) + 1e-15);
    EXPECT_LE(ref, replay_score(with_base(b), fb, a + d) + 1e-15);
  }
}

TEST(Cosine, Examples) {
  const Vector a{1.0, 0.0}, b{1.0, 1.0}, c{0.0, 3.0};
  EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-12);
  EXPECT_NEAR(cosine_similarity(a, c), 0.0, 1e-12);
  EXPECT_NEAR(cosine_similarity(a, b), 0.7071, 1e-4);
}

TEST(Cosine, Errors) {
  const Vector a{1.0, 0.0}, z{0.0, 0.0}, three{1.0, 2.0, 3.0};
  EXPECT_THROW(cosine_similarity(a, z), DomainError);
  EXPECT_THROW(cosine_similarity(a, three), DomainError);
}

TEST(Cosine, SymmetricAndScaleInvariant) {
  std::mt19937 rng(13);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> lambda(0.01, 100.0);
  for (int i = 0; i < 500; ++i) {
    const std::size_t dim = 1 + rng() % 16;
    Vector a(dim), b(dim);
    for (auto& x : a) x = n(rng);
    for (auto& x : b) x = n(rng);
    const double ab = cosine_similarity(a, b);
    EXPECT_NEAR(ab, cosine_similarity(b, a), 1e-12);
    const double l = lambda(rng);
    Vector la = a;
    for (auto& x : la) x *= l;
    EXPECT_NEAR(ab, cosine_similarity(la, b), 1e-9);
    EXPECT_GE(ab, -1.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(Text, NormalizeName) {
  EXPECT_EQ(normalize_name("  Project   X "), "project x");
  EXPECT_EQ(normalize_name("APOLLO"), "apollo");
  EXPECT_EQ(normalize_name("\tA\nB "), "a b");
}

TEST(Text, DedupeEntitiesKeepsFirstSpelling) {
  auto out = dedupe_entities({"Apollo", "apollo ", "Borealis", "APOLLO", "", "borealis"});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], "Apollo");
  EXPECT_EQ(out[1], "Borealis");
}

TEST(TurnInput, BlankTextIsDomainError) {
  TurnInput t{"s", 1, "  \t ", 0};
  EXPECT_THROW(t.validate(), DomainError);
}

TEST(GateRoute, RoundTripsThroughString) {
  EXPECT_EQ(gate_route_from_string(to_string(GateRoute::Reflex)), GateRoute::Reflex);
  EXPECT_EQ(gate_route_from_string(to_string(GateRoute::Cortex)), GateRoute::Cortex);
  EXPECT_THROW(gate_route_from_string("spinal"), DomainError);
}
