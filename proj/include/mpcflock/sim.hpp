#ifndef MPCFLOCK_SIM_HPP_
#define MPCFLOCK_SIM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "comms.hpp"
#include "flock_rules.hpp"
#include "geometry.hpp"
#include "mpc.hpp"
#include "solver.hpp"
#include "types.hpp"

namespace mpcflock {

enum class Role { leader, follower };

/// Polyline travelled at constant speed, parameterized by arc length.
struct LeaderPath {
  std::vector<Vec2> waypoints;
  double speed = 0.5;

  double length() const {
    double l = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i) l += (waypoints[i] - waypoints[i - 1]).norm();
    return l;
  }

  /// Position and unit tangent at arc length s. At a vertex the outgoing
  /// segment's tangent is used; past the end the last tangent is reported.
  std::pair<Vec2, Vec2> at(double s) const {
    Vec2 tangent = Vec2::UnitX();
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
      const Vec2 seg = waypoints[i] - waypoints[i - 1];
      const double len = seg.norm();
      if (len == 0.0) continue;
      tangent = seg / len;
      if (s < len) return {waypoints[i - 1] + s * tangent, tangent};
      s -= len;
    }
    return {waypoints.back(), tangent};
  }
};

/// Leader state at time index n: on the path at arc length speed*n*dt, at
/// rest once the final waypoint is reached.
inline AgentState leader_state(const LeaderPath &path, int n, double dt) {
  const double total = path.length();
  const double s = path.speed * dt * std::max(n, 0);
  if (s >= total) return {path.waypoints.back(), Vec2::Zero()};
  const auto [p, tangent] = path.at(s);
  return {p, path.speed * tangent};
}

/// Leader predictions for t+1 .. t+T.
inline PredictionSequence leader_outputs(const LeaderPath &path, int t, int horizon, double dt) {
  PredictionSequence out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (int k = 1; k <= horizon; ++k) out.push_back(leader_state(path, t + k, dt));
  return out;
}

struct AgentSpec {
  AgentId id = 0;
  Role role = Role::follower;
  AgentState initial;
  std::optional<int> horizon;       // overrides mpc.horizon for this agent
  std::optional<LeaderPath> path;   // leaders only; defaults to the scenario path
};

struct LinkDelay {
  AgentId from = 0;
  AgentId to = 0;
  int steps = 0;
};

struct RuleParams {
  HierarchyLevel hierarchy_cap = 10;
  double behind_weight = 0.2;
  double q_static = 0.5;
  double q_gain = 2.0;
  double q_min = 0.2;
  double q_max = 0.8;
};

enum class Ablation { none, static_q, cs_align, flat_hierarchy, horizon_1 };

inline const char *to_string(Ablation a) {
  switch (a) {
    case Ablation::none: return "none";
    case Ablation::static_q: return "static-q";
    case Ablation::cs_align: return "cs-align";
    case Ablation::flat_hierarchy: return "flat-hierarchy";
    case Ablation::horizon_1: return "horizon-1";
  }
  return "none";
}

inline Ablation ablation_from_string(const std::string &s) {
  for (auto a : {Ablation::none, Ablation::static_q, Ablation::cs_align, Ablation::flat_hierarchy, Ablation::horizon_1})
    if (s == to_string(a)) return a;
  throw ConfigError("run.ablation", "unknown ablation '" + s + "'");
}

/// Common level given to every follower under the flat-hierarchy ablation.
inline constexpr HierarchyLevel kFlatFollowerLevel = 1;

struct ScenarioConfig {
  std::string name = "scenario";
  std::vector<AgentSpec> agents;
  LeaderPath leader_path;
  Environment environment;
  double detection_radius = 0.5;
  std::optional<double> sensing_radius;  // obstacle sensing, defaults to detection_radius
  std::vector<LinkDelay> delays;
  MpcConfig mpc;
  RuleParams rules;
  SolverSettings solver;
  int steps = 0;
  std::uint64_t seed = 0;
  double jitter = 0.0;  // follower initial-position jitter amplitude [m]
  Ablation ablation = Ablation::none;
  std::optional<double> arrival_radius;

  double arrival() const { return arrival_radius.value_or(3.0 * mpc.separation_radius); }
  double sensing() const { return sensing_radius.value_or(detection_radius); }

  int horizon_of(const AgentSpec &a) const { return a.horizon.value_or(mpc.horizon); }
  const LeaderPath &path_of(const AgentSpec &a) const { return a.path ? *a.path : leader_path; }

  int delay(AgentId from, AgentId to) const {
    for (const auto &d : delays)
      if (d.from == from && d.to == to) return d.steps;
    return 0;
  }
  int max_delay() const {
    int m = 0;
    for (const auto &d : delays) m = std::max(m, d.steps);
    return m;
  }

  void validate() const;
};

namespace detail {

inline void validate_path(const LeaderPath &path, double velocity_box, const std::string &key) {
  if (path.waypoints.size() < 2) throw ConfigError(key + ".waypoints", "need at least two waypoints");
  for (const auto &w : path.waypoints)
    if (!finite(w)) throw ConfigError(key + ".waypoints", "non-finite waypoint");
  if (!(path.length() > 0)) throw ConfigError(key + ".waypoints", "path arc length must be > 0");
  if (!(path.speed > 0)) throw ConfigError(key + ".speed", "must be > 0");
  if (path.speed > velocity_box) throw ConfigError(key + ".speed", "exceeds the followers' velocity box");
}

}  // namespace detail

/// Initial states after the seeded follower jitter; leaders start on their path.
inline std::vector<AgentState> initial_states(const ScenarioConfig &cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<AgentState> out;
  for (const auto &a : cfg.agents) {
    if (a.role == Role::leader) {
      out.push_back(leader_state(cfg.path_of(a), 0, cfg.mpc.dt));
      continue;
    }
    AgentState s = a.initial;
    if (cfg.jitter > 0) {
      const double dx = unit(rng), dy = unit(rng);
      s.p += cfg.jitter * Vec2(dx, dy);
    }
    out.push_back(s);
  }
  return out;
}

inline void ScenarioConfig::validate() const {
  mpc.validate();
  solver.validate();
  const bool single_stage = ablation == Ablation::horizon_1;
  if (!single_stage && mpc.separation_horizon >= mpc.horizon)
    throw ConfigError("mpc.separation_horizon", "must be < horizon");
  if (!(detection_radius > 0)) throw ConfigError("comms.detection_radius", "must be > 0");
  if (sensing_radius && !(*sensing_radius > 0)) throw ConfigError("environment.sensing_radius", "must be > 0");
  if (rules.hierarchy_cap < 1) throw ConfigError("rules.hierarchy_cap", "must be >= 1");
  if (!(rules.behind_weight >= 0 && rules.behind_weight <= 1)) throw ConfigError("rules.behind_weight", "must be in [0, 1]");
  if (!(rules.q_static > 0 && rules.q_static < 1)) throw ConfigError("rules.q_static", "must be in (0, 1)");
  if (!(rules.q_gain >= 0)) throw ConfigError("rules.q_gain", "must be >= 0");
  if (!(rules.q_min >= 0 && rules.q_min <= rules.q_max && rules.q_max <= 1))
    throw ConfigError("rules.q_min", "need 0 <= q_min <= q_max <= 1");
  if (steps < 0) throw ConfigError("run.steps", "must be >= 0");
  if (!(jitter >= 0)) throw ConfigError("run.jitter", "must be >= 0");
  if (arrival_radius && !(*arrival_radius > 0)) throw ConfigError("run.arrival_radius", "must be > 0");
  for (std::size_t i = 0; i < environment.obstacles.size(); ++i)
    environment.obstacles[i].validate("environment.obstacles[" + std::to_string(i) + "]");
  if (environment.bounds) Obstacle{*environment.bounds, 0.0}.validate("environment.bounds");

  if (agents.empty()) throw ConfigError("agents", "no agents");
  std::set<AgentId> ids;
  int leaders = 0;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto &a = agents[i];
    const std::string key = "agents[" + std::to_string(i) + "]";
    if (!ids.insert(a.id).second) throw ConfigError(key + ".id", "duplicate id " + std::to_string(a.id));
    if (!finite(a.initial.p) || !finite(a.initial.v)) throw ConfigError(key, "non-finite initial state");
    if (a.horizon) {
      if (*a.horizon < 1) throw ConfigError(key + ".horizon", "must be >= 1");
      if (!single_stage && mpc.separation_horizon >= *a.horizon)
        throw ConfigError(key + ".horizon", "must exceed mpc.separation_horizon");
    }
    if (a.role == Role::leader) {
      ++leaders;
      detail::validate_path(path_of(a), mpc.velocity_box, a.path ? key + ".path" : "leader_path");
    } else if (a.path) {
      throw ConfigError(key + ".path", "only leaders follow a path");
    }
  }
  if (leaders == 0) throw ConfigError("agents", "at least one leader is required");

  const auto init = initial_states(*this);
  const double r_sep = mpc.separation_radius;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string key = "agents[" + std::to_string(i) + "]";
    if (environment.bounds && !contains(Obstacle{*environment.bounds, 0.0}, init[i].p, false))
      throw ConfigError(key + ".position", "outside the arena bounds");
    if (agents[i].role == Role::follower && inside_any(environment, init[i].p, true))
      throw ConfigError(key + ".position", "inside an enlarged obstacle");
    for (std::size_t j = 0; j < i; ++j)
      if ((init[i].p - init[j].p).norm() < r_sep)
        throw ConfigError(key + ".position", "closer than the separation radius to agents[" + std::to_string(j) + "]");
  }
}

/// Switches one of the rule ablations on.
inline ScenarioConfig apply_ablation(ScenarioConfig cfg, Ablation flag) {
  cfg.ablation = flag;
  switch (flag) {
    case Ablation::static_q: cfg.rules.q_gain = 0.0; break;
    case Ablation::horizon_1:
      cfg.mpc.horizon = 1;
      cfg.mpc.separation_horizon = 1;
      for (auto &a : cfg.agents) a.horizon.reset();
      break;
    case Ablation::none:
    case Ablation::cs_align:
    case Ablation::flat_hierarchy: break;
  }
  return cfg;
}

inline ScenarioConfig apply_ablation(ScenarioConfig cfg, const std::string &flag) {
  return apply_ablation(std::move(cfg), ablation_from_string(flag));
}

struct SolveSummary {
  SolveStatus status = SolveStatus::converged;
  double cost = 0.0;
  double residual = 0.0;
  int inner_iterations = 0;
  int outer_iterations = 0;

  bool operator==(const SolveSummary &) const = default;
};

/// One agent at one step: the input actuated at `step` and the resulting state
/// at step+1. Leaders carry no solve summary and q = 0.
struct AgentRecord {
  AgentId id = 0;
  Role role = Role::follower;
  Vec2 input = Vec2::Zero();
  AgentState state;
  HierarchyLevel level = 0;
  double q = 0.0;
  std::vector<AgentId> neighbors;
  std::optional<SolveSummary> solve;

  bool operator==(const AgentRecord &o) const {
    return id == o.id && role == o.role && input == o.input && state == o.state && level == o.level && q == o.q &&
           neighbors == o.neighbors && solve == o.solve;
  }
};

struct StepRecord {
  int step = 0;
  std::vector<AgentRecord> agents;  // ordered by agent id

  bool operator==(const StepRecord &) const = default;
};

using Trace = std::vector<StepRecord>;

/// Lockstep execution of the per-agent MPC workflow.
class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    std::sort(cfg_.agents.begin(), cfg_.agents.end(), [](const auto &a, const auto &b) { return a.id < b.id; });
    const auto init = initial_states(cfg_);
    for (std::size_t i = 0; i < cfg_.agents.size(); ++i) {
      const auto &spec = cfg_.agents[i];
      Runtime rt;
      rt.state = init[i];
      rt.horizon = cfg_.horizon_of(spec);
      rt.level = spec.role == Role::leader ? 0 : initial_follower_level();
      rt.inputs = Eigen::VectorXd::Zero(2 * rt.horizon);
      // packet "dispatched" before the first step: predictions for 0..T-1
      NeighborPacket p{spec.id, -1, rt.level, rt.state.p, {}};
      if (spec.role == Role::leader) {
        p.outputs = leader_outputs(cfg_.path_of(spec), -1, rt.horizon, cfg_.mpc.dt);
      } else {
        for (int k = 0; k < rt.horizon; ++k)
          p.outputs.push_back({rt.state.p + (k * cfg_.mpc.dt) * rt.state.v, rt.state.v});
      }
      rt.history.push_back(std::move(p));
      agents_.push_back(std::move(rt));
    }
  }

  const ScenarioConfig &config() const { return cfg_; }
  int time() const { return t_; }

  std::vector<AgentState> states() const {
    std::vector<AgentState> out;
    for (const auto &a : agents_) out.push_back(a.state);
    return out;
  }

  StepRecord step() {
    std::map<AgentId, Vec2> positions;
    for (std::size_t i = 0; i < agents_.size(); ++i) positions[cfg_.agents[i].id] = agents_[i].state.p;
    const auto adjacency = detect_neighbors(positions, cfg_.detection_radius);

    StepRecord record{t_, {}};
    std::vector<AgentState> next(agents_.size());
    std::vector<NeighborPacket> dispatch(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      const auto &spec = cfg_.agents[i];
      auto &rt = agents_[i];
      AgentRecord rec;
      rec.id = spec.id;
      rec.role = spec.role;
      for (AgentId j : adjacency.at(spec.id))
        if (j != spec.id) rec.neighbors.push_back(j);

      if (spec.role == Role::leader) {
        const auto &path = cfg_.path_of(spec);
        next[i] = leader_state(path, t_ + 1, cfg_.mpc.dt);
        rec.input = (next[i].v - rt.state.v) / cfg_.mpc.dt;
        dispatch[i] = {spec.id, t_, 0, rt.state.p, leader_outputs(path, t_, rt.horizon, cfg_.mpc.dt)};
      } else {
        follower_update(i, rec);
        next[i] = dynamics_step(rt.state, rec.input, cfg_.mpc.dt);
        dispatch[i] = {spec.id, t_, rec.level, rt.state.p, rollout(rt.state, rt.inputs, cfg_.mpc.dt)};
      }
      rec.state = next[i];
      record.agents.push_back(std::move(rec));
    }

    // barrier: everyone actuates and dispatches together
    const auto keep = static_cast<std::size_t>(cfg_.max_delay() + 2);
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      agents_[i].state = next[i];
      agents_[i].history.push_back(std::move(dispatch[i]));
      while (agents_[i].history.size() > keep) agents_[i].history.pop_front();
    }
    ++t_;
    return record;
  }

 private:
  struct Runtime {
    AgentState state;
    HierarchyLevel level = 0;
    int horizon = 0;
    Eigen::VectorXd inputs;  // last optimal input sequence
    std::deque<NeighborPacket> history;  // dispatched packets, oldest first
  };

  HierarchyLevel initial_follower_level() const {
    return cfg_.ablation == Ablation::flat_hierarchy ? kFlatFollowerLevel : cfg_.rules.hierarchy_cap;
  }

  /// Packet of agent i with the given stamp; stamps before the start resolve
  /// to the initial packet.
  const NeighborPacket &packet(std::size_t i, int stamp) const {
    const auto &h = agents_[i].history;
    const int oldest = h.front().stamp;
    const int s = std::max(stamp, oldest);
    return h.at(static_cast<std::size_t>(s - oldest));
  }

  std::size_t index_of(AgentId id) const {
    const auto it = std::lower_bound(cfg_.agents.begin(), cfg_.agents.end(), id,
                                     [](const AgentSpec &a, AgentId v) { return a.id < v; });
    return static_cast<std::size_t>(it - cfg_.agents.begin());
  }

  void follower_update(std::size_t i, AgentRecord &rec) {
    const auto &spec = cfg_.agents[i];
    auto &rt = agents_[i];
    const int T = rt.horizon;

    const auto own = align_horizon(packet(i, t_ - 1), T, t_);
    std::vector<AlignedPacket> received;
    std::vector<HierarchyLevel> levels;
    for (AgentId j : rec.neighbors) {
      const auto idx = index_of(j);
      const auto &pk = packet(idx, t_ - 1 - cfg_.delay(j, spec.id));
      received.push_back(align_horizon(pk, T, t_));
      levels.push_back(pk.level);
    }
    const auto vn = virtual_neighborhoods(received, spec.id, T);

    rt.level = cfg_.ablation == Ablation::flat_hierarchy ? kFlatFollowerLevel
                                                         : update_hierarchy(false, levels, cfg_.rules.hierarchy_cap);
    rec.level = rt.level;

    std::vector<Contributor> contributors;
    contributors.push_back({spec.id, rt.level, Orientation::ahead, 0.0, own.outputs});
    for (const auto &r : received) {
      const auto level = cfg_.ablation == Ablation::flat_hierarchy && r.level != 0 ? kFlatFollowerLevel : r.level;
      contributors.push_back({r.sender, level, classify_ahead(rt.state.v, rt.state.p, r.origin),
                              (rt.state.p - r.origin).norm(), r.outputs});
    }
    const auto rule = cfg_.ablation == Ablation::cs_align ? AlignmentRule::cucker_smale : AlignmentRule::orientation;
    const auto refs = reference_outputs(vn, contributors, cfg_.rules.behind_weight, rule);

    const auto q = tradeoff_weight(rt.state.p, refs.positions.front(), cfg_.rules.q_static, cfg_.rules.q_gain,
                                   cfg_.rules.q_min, cfg_.rules.q_max);
    rec.q = q.q;

    std::vector<NeighborPrediction> slots;
    for (std::size_t n = 0; n < received.size(); ++n)
      slots.push_back({received[n].sender, agents_[index_of(received[n].sender)].state.p, received[n].outputs});
    std::vector<Obstacle> sensed;
    for (const auto &o : cfg_.environment.obstacles)
      if (distance_to(o, rt.state.p) <= cfg_.sensing()) sensed.push_back(o);

    MpcConfig mpc = cfg_.mpc;
    mpc.horizon = T;
    const auto inst = pack_instance(rt.state, refs, slots, q.q, std::move(sensed));
    const auto outcome = solve(inst, mpc, shift_warm_start(rt.inputs, T), cfg_.solver);
    rt.inputs = outcome.inputs;
    rec.input = outcome.inputs.head<2>();
    rec.solve = SolveSummary{outcome.status, outcome.cost, outcome.max_residual, outcome.inner_iterations,
                             outcome.outer_iterations};
  }

  ScenarioConfig cfg_;
  std::vector<Runtime> agents_;
  int t_ = 0;
};

/// Capped BFS distance from the leader set over an adjacency.
inline std::map<AgentId, int> leader_distances(const Adjacency &adj, const std::set<AgentId> &leaders, int cap) {
  std::map<AgentId, int> dist;
  for (const auto &[id, _] : adj) dist[id] = cap;
  std::queue<AgentId> frontier;
  for (AgentId l : leaders) {
    dist[l] = 0;
    frontier.push(l);
  }
  std::set<AgentId> seen(leaders.begin(), leaders.end());
  while (!frontier.empty()) {
    const AgentId u = frontier.front();
    frontier.pop();
    for (AgentId v : adj.at(u)) {
      if (seen.count(v)) continue;
      seen.insert(v);
      dist[v] = std::min(cap, dist[u] + 1);
      frontier.push(v);
    }
  }
  return dist;
}

struct StepMetrics {
  int step = -1;  // -1 is the initial configuration
  double max_follower_distance = 0.0;
  bool connected = true;
  std::map<AgentId, int> graph_distance;  // capped at the hierarchy cap
  std::set<AgentId> reachable;            // agents with a path to some leader
  double min_pairwise_distance = std::numeric_limits<double>::infinity();
  int inside_obstacles = 0;
  bool all_converged = true;
};

struct Metrics {
  std::vector<StepMetrics> per_step;
  bool arrived = false;
  std::map<AgentId, double> final_distance_to_leader;
  std::vector<AgentId> disconnected;  // followers without a path to a leader at the end
  double min_pairwise_distance = std::numeric_limits<double>::infinity();
  double min_pairwise_distance_converged = std::numeric_limits<double>::infinity();
  int inside_obstacles = 0;
  int converged_steps = 0;
  int solves = 0;
  int converged_solves = 0;
};

namespace detail {

inline StepMetrics snapshot_metrics(const ScenarioConfig &cfg, int step, const std::vector<AgentId> &ids,
                                    const std::vector<Role> &roles, const std::vector<Vec2> &pos) {
  StepMetrics m;
  m.step = step;
  std::map<AgentId, Vec2> positions;
  std::set<AgentId> leaders;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    positions[ids[i]] = pos[i];
    if (roles[i] == Role::leader) leaders.insert(ids[i]);
  }
  const auto adj = detect_neighbors(positions, cfg.detection_radius);
  const int unreachable = static_cast<int>(ids.size()) + 1;
  for (const auto &[id, d] : leader_distances(adj, leaders, unreachable)) {
    const bool reached = d < unreachable;
    m.graph_distance[id] = reached ? std::min(d, cfg.rules.hierarchy_cap) : cfg.rules.hierarchy_cap;
    if (reached) m.reachable.insert(id);
  }

  // connectivity of the whole detection graph
  std::set<AgentId> seen{ids.front()};
  std::vector<AgentId> stack{ids.front()};
  while (!stack.empty()) {
    const AgentId u = stack.back();
    stack.pop_back();
    for (AgentId v : adj.at(u))
      if (seen.insert(v).second) stack.push_back(v);
  }
  m.connected = seen.size() == ids.size();

  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (inside_any(cfg.environment, pos[i], false)) ++m.inside_obstacles;
    for (std::size_t j = 0; j < i; ++j) m.min_pairwise_distance = std::min(m.min_pairwise_distance, (pos[i] - pos[j]).norm());
    if (roles[i] != Role::follower) continue;
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < ids.size(); ++l)
      if (roles[l] == Role::leader) nearest = std::min(nearest, (pos[i] - pos[l]).norm());
    m.max_follower_distance = std::max(m.max_follower_distance, nearest);
  }
  return m;
}

}  // namespace detail

/// Summary statistics over the initial configuration and every recorded step.
inline Metrics metrics(const Trace &trace, const ScenarioConfig &cfg) {
  std::vector<AgentSpec> specs = cfg.agents;
  const auto init = initial_states(cfg);
  std::vector<std::size_t> order(specs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return specs[a].id < specs[b].id; });

  std::vector<AgentId> ids;
  std::vector<Role> roles;
  std::vector<Vec2> pos;
  for (auto i : order) {
    ids.push_back(specs[i].id);
    roles.push_back(specs[i].role);
    pos.push_back(init[i].p);
  }

  Metrics out;
  out.per_step.push_back(detail::snapshot_metrics(cfg, -1, ids, roles, pos));
  for (const auto &rec : trace) {
    bool all_converged = true;
    for (std::size_t i = 0; i < rec.agents.size(); ++i) {
      pos[i] = rec.agents[i].state.p;
      if (const auto &s = rec.agents[i].solve) {
        ++out.solves;
        if (s->status == SolveStatus::converged) ++out.converged_solves;
        else all_converged = false;
      }
    }
    auto m = detail::snapshot_metrics(cfg, rec.step, ids, roles, pos);
    m.all_converged = all_converged;
    out.per_step.push_back(std::move(m));
  }

  for (const auto &m : out.per_step) {
    out.min_pairwise_distance = std::min(out.min_pairwise_distance, m.min_pairwise_distance);
    if (m.all_converged) {
      out.min_pairwise_distance_converged = std::min(out.min_pairwise_distance_converged, m.min_pairwise_distance);
      if (m.step >= 0) ++out.converged_steps;
    }
    out.inside_obstacles += m.inside_obstacles;
  }

  const auto &last = out.per_step.back();
  out.arrived = true;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (roles[i] != Role::follower) continue;
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < ids.size(); ++l)
      if (roles[l] == Role::leader) nearest = std::min(nearest, (pos[i] - pos[l]).norm());
    out.final_distance_to_leader[ids[i]] = nearest;
    if (!(nearest <= cfg.arrival())) out.arrived = false;
    if (!last.reachable.count(ids[i])) out.disconnected.push_back(ids[i]);
  }
  return out;
}

struct RunResult {
  Trace trace;
  Metrics metrics;
};

inline RunResult run(const ScenarioConfig &cfg) {
  Simulation sim(cfg);
  RunResult r;
  r.trace.reserve(static_cast<std::size_t>(cfg.steps));
  for (int s = 0; s < cfg.steps; ++s) r.trace.push_back(sim.step());
  r.metrics = metrics(r.trace, sim.config());
  return r;
}

}  // namespace mpcflock

#endif  // MPCFLOCK_SIM_HPP_
