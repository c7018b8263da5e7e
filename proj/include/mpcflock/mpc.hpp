#ifndef MPCFLOCK_MPC_HPP_
#define MPCFLOCK_MPC_HPP_

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "comms.hpp"
#include "geometry.hpp"
#include "types.hpp"

namespace mpcflock {

/// Number of neighbor slots in a packed instance.
inline constexpr int kNeighborSlots = 5;
/// Coordinate used for unused neighbor slots; far enough that no separation
/// term is ever active.
inline constexpr double kDummyCoordinate = 1e4;

struct MpcConfig {
  int horizon = 8;
  int separation_horizon = 4;
  double separation_radius = 0.1;   // [m], constraints compare against its square
  double separation_penalty = 100;  // rho_sep
  double discount = 0.5;            // gamma
  Vec2 input_weight{1e-3, 1e-3};    // diagonal of R, per input component
  double input_box = 2.0;           // [m/s^2]
  double velocity_box = 2.0;        // [m/s]
  double dt = 1.0 / 40.0;           // [s]

  /// The core accepts T_sep == T (every stage hard-constrained), which the
  /// single-stage ablation needs; scenario files are held to T_sep < T.
  void validate() const {
    if (horizon < 1) throw ConfigError("mpc.horizon", "must be >= 1");
    if (separation_horizon < 1 || separation_horizon > horizon)
      throw ConfigError("mpc.separation_horizon", "must be in [1, horizon]");
    if (!(separation_radius > 0)) throw ConfigError("mpc.separation_radius", "must be > 0");
    if (!(separation_penalty >= 0)) throw ConfigError("mpc.separation_penalty", "must be >= 0");
    if (!(discount > 0 && discount <= 1)) throw ConfigError("mpc.discount", "must be in (0, 1]");
    if (!(input_weight.minCoeff() >= 0)) throw ConfigError("mpc.input_weight", "must be >= 0");
    if (!(input_box > 0)) throw ConfigError("mpc.input_box", "must be > 0");
    if (!(velocity_box > 0)) throw ConfigError("mpc.velocity_box", "must be > 0");
    if (!(dt > 0)) throw ConfigError("mpc.dt", "must be > 0");
  }
};

/// Everything one agent's one-step problem depends on besides the config.
struct MpcInstance {
  AgentState initial;
  std::vector<Vec2> ref_positions;   // T entries
  std::vector<Vec2> ref_velocities;  // T entries
  std::vector<std::vector<Vec2>> neighbors;  // per slot, T predicted positions
  double q = 0.5;
  std::vector<Obstacle> obstacles;

  int horizon() const { return static_cast<int>(ref_positions.size()); }
};

inline AgentState dynamics_step(const AgentState &s, const Vec2 &u, double dt) {
  return {s.p + dt * s.v + (0.5 * dt * dt) * u, s.v + dt * u};
}

/// `inputs` holds (u_x, u_y) per stage; entry k of the result is the state
/// after applying inputs 0..k.
inline std::vector<AgentState> rollout(const AgentState &s, const Eigen::VectorXd &inputs, double dt) {
  const auto stages = static_cast<std::size_t>(inputs.size() / 2);
  std::vector<AgentState> out(stages);
  AgentState x = s;
  for (std::size_t k = 0; k < stages; ++k) {
    x = dynamics_step(x, inputs.segment<2>(static_cast<Eigen::Index>(2 * k)), dt);
    out[k] = x;
  }
  return out;
}

inline double predicted_sq_distance(const Vec2 &own, const Vec2 &neighbor) { return (own - neighbor).squaredNorm(); }

/// Multipliers for the inequality constraints handled by the augmented
/// Lagrangian: velocity box (upper/lower per component per stage, 4T) and
/// early-stage separation (T_sep x slots).
struct Multipliers {
  std::vector<double> velocity;
  std::vector<double> separation;

  static Multipliers zeros(int horizon, int separation_horizon, int slots) {
    return {std::vector<double>(static_cast<std::size_t>(4 * horizon), 0.0),
            std::vector<double>(static_cast<std::size_t>(separation_horizon * slots), 0.0)};
  }
};

/// Penalty weight and multipliers; a zero penalty drops every constraint term.
struct Augmentation {
  double penalty = 0.0;
  const Multipliers *multipliers = nullptr;
};

namespace detail {

inline double augmented_term(double c, double lambda, double mu, double &slope) {
  const double s = std::max(0.0, c + lambda / mu);
  slope = mu * s;
  return 0.5 * mu * s * s;
}

}  // namespace detail

/// Cost J plus, when `aug.penalty > 0`, the obstacle penalty and the
/// augmented-Lagrangian terms. Writes the gradient when `grad` is non-null.
inline double evaluate_objective(const Eigen::VectorXd &inputs, const MpcInstance &inst, const MpcConfig &cfg,
                                 const Augmentation &aug, Eigen::VectorXd *grad) {
  const int T = inst.horizon();
  if (inputs.size() != 2 * T) throw std::invalid_argument("evaluate_objective: input size mismatch");
  const double dt = cfg.dt;
  const double r2 = cfg.separation_radius * cfg.separation_radius;
  const double mu = aug.penalty;
  const bool constrained = mu > 0.0;
  const int slots = static_cast<int>(inst.neighbors.size());

  const auto states = rollout(inst.initial, inputs, dt);
  std::vector<Vec2> gp(static_cast<std::size_t>(T), Vec2::Zero()), gv(static_cast<std::size_t>(T), Vec2::Zero());

  double value = 0.0;
  for (int m = 0; m < T; ++m) {
    const Vec2 u = inputs.segment<2>(2 * m);
    value += cfg.input_weight.x() * u.x() * u.x() + cfg.input_weight.y() * u.y() * u.y();
  }

  const double wp = 1.0 - inst.q, wv = inst.q;
  double disc = 1.0;  // gamma^k
  for (int k = 0; k < T; ++k, disc *= cfg.discount) {
    const auto ks = static_cast<std::size_t>(k);
    const Vec2 ep = states[ks].p - inst.ref_positions[ks];
    const Vec2 ev = states[ks].v - inst.ref_velocities[ks];
    value += disc * (wp * ep.squaredNorm() + wv * ev.squaredNorm());
    gp[ks] += (2.0 * disc * wp) * ep;
    gv[ks] += (2.0 * disc * wv) * ev;

    // soft separation on late stages, discounted by gamma^(k+1)
    if (k >= cfg.separation_horizon && cfg.separation_penalty > 0.0) {
      const double w = cfg.separation_penalty * disc * cfg.discount;
      for (int j = 0; j < slots; ++j) {
        const Vec2 diff = states[ks].p - inst.neighbors[static_cast<std::size_t>(j)][ks];
        const double viol = std::max(0.0, r2 - diff.squaredNorm());
        value += w * viol * viol;
        gp[ks] += (-4.0 * w * viol) * diff;
      }
    }

    if (!constrained) continue;
    for (const auto &o : inst.obstacles) {
      Vec2 g;
      const double res = avoidance_residual(o, states[ks].p, g);
      value += mu * res * res;
      gp[ks] += (2.0 * mu * res) * g;
    }
    const auto &lam = *aug.multipliers;
    for (int c = 0; c < 2; ++c) {
      double slope = 0.0;
      const double vc = states[ks].v[c];
      value += detail::augmented_term(vc - cfg.velocity_box, lam.velocity[static_cast<std::size_t>(4 * k + 2 * c)], mu, slope);
      gv[ks][c] += slope;
      value += detail::augmented_term(-vc - cfg.velocity_box, lam.velocity[static_cast<std::size_t>(4 * k + 2 * c + 1)], mu, slope);
      gv[ks][c] -= slope;
    }
    if (k < cfg.separation_horizon) {
      for (int j = 0; j < slots; ++j) {
        const Vec2 diff = states[ks].p - inst.neighbors[static_cast<std::size_t>(j)][ks];
        double slope = 0.0;
        value += detail::augmented_term(r2 - diff.squaredNorm(),
                                        lam.separation[static_cast<std::size_t>(k * slots + j)], mu, slope);
        gp[ks] += (-2.0 * slope) * diff;
      }
    }
  }

  if (grad) {
    grad->resize(2 * T);
    // chain rule through the rollout: dp_k/du_m = (k-m+1/2) dt^2, dv_k/du_m = dt
    for (int m = 0; m < T; ++m) {
      Vec2 g(2.0 * cfg.input_weight.x() * inputs[2 * m], 2.0 * cfg.input_weight.y() * inputs[2 * m + 1]);
      for (int k = m; k < T; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        g += ((k - m + 0.5) * dt * dt) * gp[ks] + dt * gv[ks];
      }
      grad->segment<2>(2 * m) = g;
    }
  }
  return value;
}

inline double total_cost(const Eigen::VectorXd &inputs, const MpcInstance &inst, const MpcConfig &cfg) {
  return evaluate_objective(inputs, inst, cfg, {}, nullptr);
}

inline Eigen::VectorXd cost_gradient(const Eigen::VectorXd &inputs, const MpcInstance &inst, const MpcConfig &cfg) {
  Eigen::VectorXd g;
  evaluate_objective(inputs, inst, cfg, {}, &g);
  return g;
}

struct ConstraintResiduals {
  std::vector<double> obstacle;                 // per stage, max over obstacles
  std::vector<double> velocity;                 // per stage, max component excess
  std::vector<std::vector<double>> separation;  // [stage < T_sep][slot]

  double max() const {
    double m = 0.0;
    for (double x : obstacle) m = std::max(m, x);
    for (double x : velocity) m = std::max(m, x);
    for (const auto &row : separation)
      for (double x : row) m = std::max(m, x);
    return m;
  }
};

inline ConstraintResiduals constraint_residuals(const Eigen::VectorXd &inputs, const MpcInstance &inst,
                                                const MpcConfig &cfg) {
  const int T = inst.horizon();
  const double r2 = cfg.separation_radius * cfg.separation_radius;
  const auto states = rollout(inst.initial, inputs, cfg.dt);
  ConstraintResiduals res;
  res.obstacle.assign(static_cast<std::size_t>(T), 0.0);
  res.velocity.assign(static_cast<std::size_t>(T), 0.0);
  const int sep_stages = std::min(cfg.separation_horizon, T);
  res.separation.assign(static_cast<std::size_t>(sep_stages), std::vector<double>(inst.neighbors.size(), 0.0));
  for (int k = 0; k < T; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    for (const auto &o : inst.obstacles) res.obstacle[ks] = std::max(res.obstacle[ks], avoidance_residual(o, states[ks].p));
    res.velocity[ks] = std::max(0.0, states[ks].v.cwiseAbs().maxCoeff() - cfg.velocity_box);
    if (k < sep_stages)
      for (std::size_t j = 0; j < inst.neighbors.size(); ++j)
        res.separation[ks][j] = std::max(0.0, r2 - predicted_sq_distance(states[ks].p, inst.neighbors[j][ks]));
  }
  return res;
}

/// A neighbor eligible for a separation slot: its current position ranks it,
/// `outputs[k]` (possibly shorter than the horizon) fills stage k.
struct NeighborPrediction {
  AgentId id = 0;
  Vec2 position = Vec2::Zero();
  std::span<const AgentState> outputs;
};

/// Fixed-size instance: the kNeighborSlots closest neighbors fill the slots,
/// everything missing (absent slots and uncovered stages) is a dummy position.
inline MpcInstance pack_instance(const AgentState &own, const ReferenceOutputs &refs,
                                 std::span<const NeighborPrediction> neighbors, double q,
                                 std::vector<Obstacle> obstacles) {
  const int T = refs.horizon();
  auto bad = [](const Vec2 &x) { return !finite(x); };
  if (bad(own.p) || bad(own.v) || !std::isfinite(q)) throw std::invalid_argument("pack_instance: non-finite state or weight");
  for (int k = 0; k < T; ++k)
    if (bad(refs.positions[static_cast<std::size_t>(k)]) || bad(refs.velocities[static_cast<std::size_t>(k)]))
      throw std::invalid_argument("pack_instance: non-finite reference");

  MpcInstance inst;
  inst.initial = own;
  inst.ref_positions = refs.positions;
  inst.ref_velocities = refs.velocities;
  inst.q = q;
  inst.obstacles = std::move(obstacles);

  std::vector<Candidate> candidates;
  for (const auto &n : neighbors) {
    if (bad(n.position)) throw std::invalid_argument("pack_instance: non-finite neighbor position");
    candidates.push_back({n.id, n.position});
  }
  const auto chosen = closest_k(own.p, candidates, kNeighborSlots);
  const Vec2 dummy(kDummyCoordinate, kDummyCoordinate);
  inst.neighbors.assign(kNeighborSlots, std::vector<Vec2>(static_cast<std::size_t>(T), dummy));
  for (std::size_t s = 0; s < chosen.size(); ++s) {
    const auto it = std::find_if(neighbors.begin(), neighbors.end(), [&](const auto &n) { return n.id == chosen[s]; });
    for (int k = 0; k < T && static_cast<std::size_t>(k) < it->outputs.size(); ++k) {
      const Vec2 &x = it->outputs[static_cast<std::size_t>(k)].p;
      if (bad(x)) throw std::invalid_argument("pack_instance: non-finite neighbor prediction");
      inst.neighbors[s][static_cast<std::size_t>(k)] = x;
    }
  }
  return inst;
}

}  // namespace mpcflock

#endif  // MPCFLOCK_MPC_HPP_
