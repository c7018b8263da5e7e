#ifndef MPCFLOCK_COMMS_HPP_
#define MPCFLOCK_COMMS_HPP_

#include <algorithm>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "flock_rules.hpp"
#include "types.hpp"

namespace mpcflock {

/// What an agent dispatches at the end of step `stamp`: its level, its
/// position at `stamp` (used for orientation tests), and predictions for
/// stamp+1 .. stamp+T.
struct NeighborPacket {
  AgentId sender = 0;
  int stamp = -1;
  HierarchyLevel level = 0;
  Vec2 origin = Vec2::Zero();
  PredictionSequence outputs;

  int horizon() const { return static_cast<int>(outputs.size()); }
};

/// Symmetric proximity adjacency including self-loops, keyed by agent id.
/// Neighbor lists are sorted by id.
using Adjacency = std::map<AgentId, std::vector<AgentId>>;

inline Adjacency detect_neighbors(const std::map<AgentId, Vec2> &positions, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("detect_neighbors: radius must be > 0");
  Adjacency adj;
  const double r2 = radius * radius;
  for (const auto &[i, pi] : positions) {
    auto &row = adj[i];
    for (const auto &[j, pj] : positions)
      if (i == j || (pi - pj).squaredNorm() <= r2) row.push_back(j);
  }
  return adj;
}

/// The part of a packet that refers to stages t .. t+T_i-1 of the receiver.
struct AlignedPacket {
  AgentId sender = 0;
  HierarchyLevel level = 0;
  Vec2 origin = Vec2::Zero();
  std::span<const AgentState> outputs;  // outputs[k] is the prediction for stage k

  /// Index of the last stage the sender contributes to, or -1 for none.
  int last_stage() const { return static_cast<int>(outputs.size()) - 1; }
};

/// Extra delay of a packet read at step `now`: 0 when it was dispatched at the
/// end of the previous step.
inline int packet_delay(const NeighborPacket &packet, int now) { return now - packet.stamp - 1; }

/// Drops the entries that predict the past and keeps at most `receiver_horizon`
/// of the rest. A fully stale packet yields an empty range.
inline AlignedPacket align_horizon(const NeighborPacket &packet, int receiver_horizon, int now) {
  const int delay = packet_delay(packet, now);
  if (delay < 0) throw std::invalid_argument("align_horizon: packet stamped in the future");
  AlignedPacket out{packet.sender, packet.level, packet.origin, {}};
  const int available = packet.horizon() - delay;
  if (available <= 0) return out;
  const int usable = std::min(available, receiver_horizon);
  out.outputs = std::span<const AgentState>(packet.outputs).subspan(static_cast<std::size_t>(delay),
                                                                      static_cast<std::size_t>(usable));
  return out;
}

/// Stage k = {self} plus every sender whose usable range covers k; ids sorted.
inline VirtualNeighborhoods virtual_neighborhoods(std::span<const AlignedPacket> packets, AgentId self,
                                                  int horizon) {
  VirtualNeighborhoods vn;
  vn.stages.resize(static_cast<std::size_t>(horizon));
  for (int k = 0; k < horizon; ++k) {
    auto &stage = vn.stages[static_cast<std::size_t>(k)];
    stage.push_back(self);
    for (const auto &p : packets)
      if (p.sender != self && p.last_stage() >= k) stage.push_back(p.sender);
    std::sort(stage.begin(), stage.end());
    stage.erase(std::unique(stage.begin(), stage.end()), stage.end());
  }
  return vn;
}

struct Candidate {
  AgentId id = 0;
  Vec2 position = Vec2::Zero();
};

/// Up to k ids ordered by distance to `own`, ties broken by smaller id.
inline std::vector<AgentId> closest_k(const Vec2 &own, std::span<const Candidate> candidates, int k) {
  if (k < 0) throw std::invalid_argument("closest_k: k must be >= 0");
  std::vector<std::pair<double, AgentId>> order;
  order.reserve(candidates.size());
  for (const auto &c : candidates) order.emplace_back((c.position - own).squaredNorm(), c.id);
  std::sort(order.begin(), order.end());
  std::vector<AgentId> ids;
  for (std::size_t n = 0; n < order.size() && n < static_cast<std::size_t>(k); ++n) ids.push_back(order[n].second);
  return ids;
}

}  // namespace mpcflock

#endif  // MPCFLOCK_COMMS_HPP_
