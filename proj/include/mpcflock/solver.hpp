#ifndef MPCFLOCK_SOLVER_HPP_
#define MPCFLOCK_SOLVER_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mpc.hpp"
#include "types.hpp"

namespace mpcflock {

struct SolverSettings {
  double inner_tolerance = 1e-4;  // projected step length, in input units
  double outer_tolerance = 1e-3;  // max constraint residual
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;
  int max_inner_iterations = 500;
  int max_outer_iterations = 10;

  void validate() const {
    if (!(inner_tolerance > 0)) throw ConfigError("solver.inner_tolerance", "must be > 0");
    if (!(outer_tolerance > 0)) throw ConfigError("solver.outer_tolerance", "must be > 0");
    if (!(initial_penalty > 0)) throw ConfigError("solver.initial_penalty", "must be > 0");
    if (!(penalty_growth > 1)) throw ConfigError("solver.penalty_growth", "must be > 1");
    if (max_inner_iterations < 1) throw ConfigError("solver.max_inner_iterations", "must be >= 1");
    if (max_outer_iterations < 1) throw ConfigError("solver.max_outer_iterations", "must be >= 1");
  }
};

enum class SolveStatus { converged, max_iterations, infeasible_tolerance };

inline const char *to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::infeasible_tolerance: return "infeasible_tolerance";
  }
  return "unknown";
}

inline SolveStatus solve_status_from_string(const std::string &s) {
  if (s == "converged") return SolveStatus::converged;
  if (s == "max_iterations") return SolveStatus::max_iterations;
  if (s == "infeasible_tolerance") return SolveStatus::infeasible_tolerance;
  throw std::invalid_argument("unknown solve status '" + s + "'");
}

/// One outer iteration as logged by `solve`. `best_residual` is the max
/// constraint residual of the best iterate found so far.
struct OuterIterate {
  double penalty = 0.0;
  double residual = 0.0;
  double best_residual = 0.0;
  int inner_iterations = 0;
  bool inner_converged = false;
};

struct SolveOutcome {
  Eigen::VectorXd inputs;
  SolveStatus status = SolveStatus::converged;
  double cost = 0.0;
  double max_residual = 0.0;
  int inner_iterations = 0;
  int outer_iterations = 0;
  std::vector<OuterIterate> trace;
};

inline Eigen::VectorXd project_box(const Eigen::VectorXd &u, double radius) {
  return u.cwiseMax(-radius).cwiseMin(radius);
}

struct InnerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Spectral projected gradient with monotone Armijo backtracking on the box
/// |x_i| <= radius. `objective(x, grad*)` returns f(x) and fills the gradient.
/// Stops when the projected step |P(x - a g) - x|_inf, with a the current
/// spectral step, is at most the inner tolerance.
template <class Objective>
InnerResult inner_solve(Objective &&objective, double radius, const Eigen::VectorXd &warm_start,
                        const SolverSettings &settings) {
  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-12, kMaxStep = 1e12;

  auto checked = [&](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
    const double f = objective(x, &g);
    if (!std::isfinite(f) || !g.allFinite()) throw SolverError("inner_solve: non-finite objective or gradient");
    return f;
  };

  InnerResult r;
  r.x = project_box(warm_start, radius);
  Eigen::VectorXd g, gn;
  double f = checked(r.x, g);

  // initial step from the curvature along the steepest-descent direction
  double step = 1.0;
  if (const double gnorm = g.norm(); gnorm > 0.0) {
    const double h = 1e-6 * std::max(1.0, r.x.lpNorm<Eigen::Infinity>());
    const Eigen::VectorXd e = -g / gnorm;
    checked(r.x + h * e, gn);
    const double curvature = e.dot(gn - g) / h;
    step = curvature > 0.0 ? std::clamp(1.0 / curvature, kMinStep, kMaxStep) : 1.0;
  }

  for (;;) {
    const Eigen::VectorXd d = project_box(r.x - step * g, radius) - r.x;
    if (d.lpNorm<Eigen::Infinity>() <= settings.inner_tolerance) {
      r.converged = true;
      break;
    }
    if (r.iterations >= settings.max_inner_iterations) break;
    ++r.iterations;

    const double slope = g.dot(d);
    double lambda = 1.0, fn = 0.0;
    Eigen::VectorXd xn;
    bool accepted = false;
    while (lambda > 1e-20) {
      xn = r.x + lambda * d;
      fn = checked(xn, gn);
      if (fn <= f + kArmijo * lambda * slope) {
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) break;  // no descent left at machine precision

    const Eigen::VectorXd s = xn - r.x;
    const double sy = s.dot(gn - g);
    step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, kMinStep, kMaxStep) : kMaxStep;
    // the box clamp of the next trial keeps a huge step harmless
    r.x = project_box(xn, radius);
    f = fn;
    g = gn;
  }
  r.value = f;
  return r;
}

/// Penalty method for obstacle equalities and augmented Lagrangian for the
/// velocity box and early-stage separation, around `inner_solve`.
inline SolveOutcome solve(const MpcInstance &inst, const MpcConfig &cfg, const Eigen::VectorXd &warm_start,
                          const SolverSettings &settings) {
  const int T = inst.horizon();
  const int slots = static_cast<int>(inst.neighbors.size());
  const int sep_stages = std::min(cfg.separation_horizon, T);
  const double r2 = cfg.separation_radius * cfg.separation_radius;

  auto lambda = Multipliers::zeros(T, sep_stages, slots);
  double mu = settings.initial_penalty;
  Eigen::VectorXd u = warm_start.size() == 2 * T ? warm_start : Eigen::VectorXd::Zero(2 * T);

  SolveOutcome out;
  Eigen::VectorXd best;
  double best_residual = 0.0;
  bool done = false;
  for (int outer = 0; outer < settings.max_outer_iterations && !done; ++outer) {
    const Augmentation aug{mu, &lambda};
    auto objective = [&](const Eigen::VectorXd &x, Eigen::VectorXd *grad) {
      return evaluate_objective(x, inst, cfg, aug, grad);
    };
    const auto inner = inner_solve(objective, cfg.input_box, u, settings);
    u = inner.x;
    out.inner_iterations += inner.iterations;
    out.outer_iterations = outer + 1;

    const double residual = constraint_residuals(u, inst, cfg).max();
    if (best.size() == 0 || residual <= best_residual) {
      best = u;
      best_residual = residual;
    }
    out.trace.push_back({mu, residual, best_residual, inner.iterations, inner.converged});

    if (residual <= settings.outer_tolerance) {
      if (inner.converged) {
        best = u;
        best_residual = residual;
        out.status = SolveStatus::converged;
        done = true;
      }
      continue;  // feasible already; only the inner solve needs more iterations
    }

    // multiplier updates: lambda <- max(0, lambda + mu c)
    const auto states = rollout(inst.initial, u, cfg.dt);
    for (int k = 0; k < T; ++k) {
      for (int c = 0; c < 2; ++c) {
        const double vc = states[static_cast<std::size_t>(k)].v[c];
        auto &up = lambda.velocity[static_cast<std::size_t>(4 * k + 2 * c)];
        auto &lo = lambda.velocity[static_cast<std::size_t>(4 * k + 2 * c + 1)];
        up = std::max(0.0, up + mu * (vc - cfg.velocity_box));
        lo = std::max(0.0, lo + mu * (-vc - cfg.velocity_box));
      }
      if (k < sep_stages)
        for (int j = 0; j < slots; ++j) {
          auto &l = lambda.separation[static_cast<std::size_t>(k * slots + j)];
          const double d = predicted_sq_distance(states[static_cast<std::size_t>(k)].p,
                                                 inst.neighbors[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]);
          l = std::max(0.0, l + mu * (r2 - d));
        }
    }
    mu *= settings.penalty_growth;
  }

  if (!done) out.status = best_residual <= settings.outer_tolerance ? SolveStatus::max_iterations
                                                                    : SolveStatus::infeasible_tolerance;
  out.inputs = best;
  out.max_residual = best_residual;
  out.cost = total_cost(best, inst, cfg);
  return out;
}

/// Receding-horizon warm start: drop the first input, repeat the last one.
inline Eigen::VectorXd shift_warm_start(const Eigen::VectorXd &previous, int horizon) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * horizon);
  if (previous.size() != 2 * horizon || horizon == 0) return w;
  for (int k = 0; k + 1 < horizon; ++k) w.segment<2>(2 * k) = previous.segment<2>(2 * k + 2);
  w.segment<2>(2 * (horizon - 1)) = previous.segment<2>(2 * (horizon - 1));
  return w;
}

}  // namespace mpcflock

#endif  // MPCFLOCK_SOLVER_HPP_
