#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cranimem {

using Vector = std::vector<double>;

struct TurnInput {
  std::string session_id;
  std::int64_t turn_id = 0;
  std::string text;
  std::int64_t received_at = 0;  // unix ms

  // Throws DomainError when text is blank.
  void validate() const;
};

struct GoalState {
  std::string goal_text;
  std::optional<Vector> goal_embedding;  // unit norm when present
  std::int64_t updated_at_turn = 0;

  bool operator==(const GoalState&) const = default;
};

struct UtilityScores {
  double importance = 0.0;
  double surprise = 0.0;
  double emotion = 0.0;
  double base_utility = 0.0;

  // Builds the triple and derives base_utility; arguments must be in [0,1].
  static UtilityScores from(double importance, double surprise, double emotion);

  bool operator==(const UtilityScores&) const = default;
};

enum class GateRoute { Reflex, Cortex };

const char* to_string(GateRoute route);
GateRoute gate_route_from_string(const std::string& s);

struct MemoryItem {
  std::string item_id;
  std::string session_id;
  std::int64_t turn_id = 0;
  std::string snippet;
  std::int64_t created_at = 0;
  std::vector<std::string> entities;
  UtilityScores utility;
  std::int64_t access_count = 0;
  std::int64_t last_accessed_turn = 0;
  GateRoute gate_route = GateRoute::Reflex;
  double gate_similarity = 0.0;

  bool operator==(const MemoryItem&) const = default;
};

double base_utility(double importance, double surprise, double emotion);

// base_utility * (1 + alpha * freq_bonus)
double replay_score(const MemoryItem& item, double freq_bonus, double alpha);

// Throws DomainError on dimension mismatch or a zero vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

double l2_norm(std::span<const double> v);
Vector normalized(std::span<const double> v);

std::int64_t now_ms();

}  // namespace cranimem
