#include "cranimem/core.hpp"

#include <chrono>
#include <cmath>

#include "cranimem/errors.hpp"
#include "cranimem/text.hpp"

namespace cranimem {

namespace {
void require_unit_interval(const char* field, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DomainError(field, "must be in [0,1], got " + std::to_string(v));
  }
}
}  // namespace

void TurnInput::validate() const {
  if (trim(text).empty()) throw DomainError("text", "must be non-empty after trimming");
}

UtilityScores UtilityScores::from(double importance, double surprise, double emotion) {
  return UtilityScores{importance, surprise, emotion,
                       cranimem::base_utility(importance, surprise, emotion)};
}

const char* to_string(GateRoute route) {
  return route == GateRoute::Reflex ? "reflex" : "cortex";
}

GateRoute gate_route_from_string(const std::string& s) {
  if (s == "reflex") return GateRoute::Reflex;
  if (s == "cortex") return GateRoute::Cortex;
  throw DomainError("gate_route", "unknown route '" + s + "'");
}

double base_utility(double importance, double surprise, double emotion) {
  require_unit_interval("importance", importance);
  require_unit_interval("surprise", surprise);
  require_unit_interval("emotion", emotion);
  return (importance + surprise + emotion) / 3.0;
}

double replay_score(const MemoryItem& item, double freq_bonus, double alpha) {
  if (!(freq_bonus >= 0.0)) throw DomainError("freq_bonus", "must be >= 0");
  if (!(alpha >= 0.0)) throw DomainError("alpha", "must be >= 0");
  return item.utility.base_utility * (1.0 + alpha * freq_bonus);
}

double l2_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

Vector normalized(std::span<const double> v) {
  const double n = l2_norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("vector", "cannot normalize a zero vector");
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DomainError("vector", "dimension mismatch " + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()));
  }
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) throw DomainError("vector", "zero vector has no direction");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  double c = dot / (na * nb);
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace cranimem
