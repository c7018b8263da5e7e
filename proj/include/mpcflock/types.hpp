#ifndef MPCFLOCK_TYPES_HPP_
#define MPCFLOCK_TYPES_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpcflock {

using Vec2 = Eigen::Vector2d;
using AgentId = std::int32_t;

/// Planar double-integrator state. The output y coincides with the state, (p, v).
struct AgentState {
  Vec2 p = Vec2::Zero();
  Vec2 v = Vec2::Zero();

  bool operator==(const AgentState &o) const { return p == o.p && v == o.v; }
};

/// Per-stage predicted outputs. Entry k refers to the (k+1)-th instant after
/// the time the sequence was computed at.
using PredictionSequence = std::vector<AgentState>;

/// Raised when a scenario or parameter block violates an invariant. `key`
/// names the offending config entry when there is one.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string &what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string &key() const noexcept { return key_; }

 private:
  std::string key_;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool finite(const Vec2 &x) { return x.allFinite(); }

}  // namespace mpcflock

#endif  // MPCFLOCK_TYPES_HPP_
