#ifndef MPCFLOCK_FLOCK_RULES_HPP_
#define MPCFLOCK_FLOCK_RULES_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "types.hpp"

namespace mpcflock {

/// Hierarchy level; leaders hold 0, followers hold a value in [1, cap].
using HierarchyLevel = int;

/// Leaders stay at 0. Followers take one more than the lowest neighbor level,
/// capped; an isolated follower falls back to the cap.
inline HierarchyLevel update_hierarchy(bool is_leader, std::span<const HierarchyLevel> neighbor_levels,
                                       HierarchyLevel cap) {
  if (is_leader) return 0;
  HierarchyLevel best = cap;
  for (HierarchyLevel l : neighbor_levels) best = std::min(best, l + 1);
  return std::min(best, cap);
}

/// w_j proportional to 2^-level_j, normalized over the given members.
inline std::vector<double> cohesion_weights(std::span<const HierarchyLevel> levels) {
  if (levels.empty()) throw std::invalid_argument("cohesion_weights: empty neighborhood");
  // shift by the minimum level so the largest raw weight is exactly 1
  const HierarchyLevel lo = *std::min_element(levels.begin(), levels.end());
  std::vector<double> w(levels.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    w[j] = std::ldexp(1.0, lo - levels[j]);
    sum += w[j];
  }
  for (double &x : w) x /= sum;
  return w;
}

enum class Orientation { ahead, behind };

/// Ahead iff <v_i, p_j - p_i> >= 0. Zero velocity counts as ahead.
inline Orientation classify_ahead(const Vec2 &own_velocity, const Vec2 &own_position,
                                  const Vec2 &neighbor_position) {
  return own_velocity.dot(neighbor_position - own_position) >= 0.0 ? Orientation::ahead
                                                                    : Orientation::behind;
}

inline std::vector<double> normalized(std::vector<double> raw) {
  double sum = 0.0;
  for (double x : raw) sum += x;
  if (!(sum > 0.0)) throw std::invalid_argument("weights must have a positive sum");
  for (double &x : raw) x /= sum;
  return raw;
}

/// Raw weight 1 for ahead, `behind_weight` for behind, normalized to sum to one.
inline std::vector<double> alignment_weights(std::span<const Orientation> classes, double behind_weight) {
  if (classes.empty()) throw std::invalid_argument("alignment_weights: empty neighborhood");
  std::vector<double> raw(classes.size());
  for (std::size_t j = 0; j < classes.size(); ++j)
    raw[j] = classes[j] == Orientation::ahead ? 1.0 : behind_weight;
  return normalized(std::move(raw));
}

/// Classic Cucker-Smale alignment: raw weight 1/(1 + |p_i - p_j|^2), normalized.
inline std::vector<double> cucker_smale_weights(std::span<const double> distances) {
  if (distances.empty()) throw std::invalid_argument("cucker_smale_weights: empty neighborhood");
  std::vector<double> raw(distances.size());
  for (std::size_t j = 0; j < distances.size(); ++j) raw[j] = 1.0 / (1.0 + distances[j] * distances[j]);
  return normalized(std::move(raw));
}

enum class AlignmentRule { orientation, cucker_smale };

/// Per-stage membership: stage k lists the ids contributing to stage t+k.
struct VirtualNeighborhoods {
  std::vector<std::vector<AgentId>> stages;

  int horizon() const { return static_cast<int>(stages.size()); }
  const std::vector<AgentId> &at(int k) const { return stages.at(static_cast<std::size_t>(k)); }
};

/// One member of the neighborhood as seen by the agent building references.
/// `outputs[k]` is the member's prediction for stage k (already shifted and
/// truncated); `distance` is only used by the Cucker-Smale rule.
struct Contributor {
  AgentId id = 0;
  HierarchyLevel level = 0;
  Orientation orientation = Orientation::ahead;
  double distance = 0.0;
  std::span<const AgentState> outputs;
};

struct ReferenceOutputs {
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;

  int horizon() const { return static_cast<int>(positions.size()); }
};

/// Weighted cohesion/alignment references per stage. Alignment orientation is
/// decided once per sampling time and carried by each contributor.
inline ReferenceOutputs reference_outputs(const VirtualNeighborhoods &vn,
                                          std::span<const Contributor> contributors,
                                          double behind_weight,
                                          AlignmentRule rule = AlignmentRule::orientation) {
  const int horizon = vn.horizon();
  ReferenceOutputs ref;
  ref.positions.resize(static_cast<std::size_t>(horizon));
  ref.velocities.resize(static_cast<std::size_t>(horizon));

  std::vector<const Contributor *> members;
  std::vector<HierarchyLevel> levels;
  std::vector<Orientation> classes;
  std::vector<double> distances;
  for (int k = 0; k < horizon; ++k) {
    members.clear();
    for (AgentId id : vn.at(k)) {
      auto it = std::find_if(contributors.begin(), contributors.end(),
                             [id](const Contributor &c) { return c.id == id; });
      if (it == contributors.end())
        throw std::invalid_argument("reference_outputs: member " + std::to_string(id) + " has no data");
      if (it->outputs.size() <= static_cast<std::size_t>(k))
        throw std::invalid_argument("reference_outputs: sequence of agent " + std::to_string(id) +
                                    " is shorter than its stage membership");
      members.push_back(&*it);
    }
    if (members.empty()) throw std::invalid_argument("reference_outputs: empty stage neighborhood");

    levels.clear();
    classes.clear();
    distances.clear();
    for (const auto *m : members) {
      levels.push_back(m->level);
      classes.push_back(m->orientation);
      distances.push_back(m->distance);
    }
    const auto w = cohesion_weights(levels);
    const auto omega = rule == AlignmentRule::orientation ? alignment_weights(classes, behind_weight)
                                                          : cucker_smale_weights(distances);
    Vec2 p = Vec2::Zero(), v = Vec2::Zero();
    for (std::size_t j = 0; j < members.size(); ++j) {
      const auto &y = members[j]->outputs[static_cast<std::size_t>(k)];
      p += w[j] * y.p;
      v += omega[j] * y.v;
    }
    ref.positions[static_cast<std::size_t>(k)] = p;
    ref.velocities[static_cast<std::size_t>(k)] = v;
  }
  return ref;
}

struct TradeoffWeight {
  double q = 0.5;

  /// Diagonal of Q in output order (p_x, p_y, v_x, v_y).
  Eigen::Vector4d diagonal() const { return {1.0 - q, 1.0 - q, q, q}; }
  Eigen::Matrix4d matrix() const { return diagonal().asDiagonal(); }
};

/// q = clamp(q_st / (1 + c |p - p_ref|^2), q_lo, q_hi).
inline TradeoffWeight tradeoff_weight(const Vec2 &own_position, const Vec2 &reference_position,
                                      double q_static, double gain, double q_lo, double q_hi) {
  const double raw = q_static / (1.0 + gain * (own_position - reference_position).squaredNorm());
  return {std::clamp(raw, q_lo, q_hi)};
}

}  // namespace mpcflock

#endif  // MPCFLOCK_FLOCK_RULES_HPP_
