// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// hard failure. The ablation report (criterion 8) only fails if a run aborts.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "mpcflock/io.hpp"
#include "mpcflock/solver.hpp"
#include "oracles.hpp"

using namespace mpcflock;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void verdict(int id, bool ok, const std::string &detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string scenario_path(const std::string &name) { return std::string(MPCFLOCK_SCENARIO_DIR) + "/" + name + ".json"; }

// Synchronous rounds of the level update on a static graph with per-link
// delays: a message sent on link (j -> i) in round r is used in round r + d.
void hierarchy_lemma() {
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  constexpr int cap = 10;
  int mismatches = 0, graphs = 0, deep = 0, capped = 0;
  for (; graphs < 200; ++graphs) {
    const int n = 2 + static_cast<int>(rng() % 49);
    const int delta = static_cast<int>(rng() % 3);
    const int leaders = 1 + static_cast<int>(rng() % std::min(3, n));
    // sparse enough for long chains and leaderless components, dense enough
    // for many connected cases
    std::uniform_real_distribution<double> unit(0, 1);
    const double p = 0.5 * unit(rng) * 4.0 / n;
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    std::vector<std::vector<int>> delay(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), 0));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (unit(rng) < p) {
          adj[static_cast<std::size_t>(i)].push_back(j);
          adj[static_cast<std::size_t>(j)].push_back(i);
          delay[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = static_cast<int>(rng() % (delta + 1));
          delay[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = static_cast<int>(rng() % (delta + 1));
        }
    std::vector<bool> leader(static_cast<std::size_t>(n), false);
    for (int l = 0; l < leaders; ++l) leader[rng() % static_cast<std::size_t>(n)] = true;

    // history[r][i] is the level agent i held after round r; row 0 is the
    // arbitrary initial estimate
    std::vector<std::vector<HierarchyLevel>> history(1, std::vector<HierarchyLevel>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i)
      history[0][static_cast<std::size_t>(i)] = leader[static_cast<std::size_t>(i)] ? 0 : static_cast<int>(rng() % (cap + 1));
    const int rounds = (delta + 1) * cap;
    for (int r = 1; r <= rounds; ++r) {
      std::vector<HierarchyLevel> next(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        std::vector<HierarchyLevel> heard;
        for (int j : adj[static_cast<std::size_t>(i)]) {
          const int sent = std::max(0, r - 1 - delay[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
          heard.push_back(history[static_cast<std::size_t>(sent)][static_cast<std::size_t>(j)]);
        }
        next[static_cast<std::size_t>(i)] = update_hierarchy(leader[static_cast<std::size_t>(i)], heard, cap);
      }
      history.push_back(std::move(next));
    }
    const auto bfs = oracle::capped_bfs(adj, leader, cap);
    for (int i = 0; i < n; ++i) {
      const int b = bfs[static_cast<std::size_t>(i)];
      deep += b >= 4 && b < cap;
      capped += b == cap;
      if (history.back()[static_cast<std::size_t>(i)] != b) ++mismatches;
    }
  }
  const double t = seconds_since(start);
  std::ostringstream d;
  d << "hierarchy lemma, " << graphs << " graphs, " << mismatches << " mismatches (" << deep
    << " agents at depth 4 to 9, " << capped << " capped), " << t << " s";
  verdict(1, mismatches == 0 && t < 10.0, d.str());
}

void weight_suites() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> unit(0, 1);
  double worst_sum = 0, worst_ratio = 0;
  bool positive = true;
  for (int n = 0; n < 100000; ++n) {
    const std::size_t size = 1 + rng() % 12;
    std::vector<HierarchyLevel> levels(size);
    std::vector<Orientation> classes(size);
    for (std::size_t j = 0; j < size; ++j) {
      levels[j] = static_cast<int>(rng() % 11);
      classes[j] = j == 0 || rng() % 2 ? Orientation::ahead : Orientation::behind;  // self is always ahead
    }
    const auto wc = cohesion_weights(levels);
    const auto wa = alignment_weights(classes, 0.01 + 0.99 * unit(rng));
    double sc = 0, sa = 0;
    for (std::size_t j = 0; j < size; ++j) {
      positive = positive && wc[j] > 0 && wa[j] > 0;
      sc += wc[j];
      sa += wa[j];
    }
    worst_sum = std::max({worst_sum, std::abs(sc - 1), std::abs(sa - 1)});
    for (std::size_t j = 0; j < size; ++j)
      for (std::size_t k = 0; k < size; ++k) {
        const double law = std::exp2(levels[k] - levels[j]);
        worst_ratio = std::max(worst_ratio, std::abs(wc[j] / wc[k] - law) / law);
      }
  }
  std::ostringstream d;
  d << "weights, max |sum-1| " << worst_sum << ", max ratio-law rel error " << worst_ratio;
  verdict(2, positive && worst_sum <= 1e-12 && worst_ratio <= 1e-9, d.str());
}

void gradient_check() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(-1, 1), unit(0, 1);
  double worst = 0;
  int active_obstacle = 0, active_hinge = 0;
  for (int n = 0; n < 100; ++n) {
    MpcConfig cfg;
    cfg.horizon = 8;
    cfg.separation_horizon = 1 + static_cast<int>(rng() % 7);
    cfg.dt = 0.1;
    cfg.separation_radius = 0.3;
    cfg.input_weight = {0.01 + 0.1 * unit(rng), 0.01 + 0.1 * unit(rng)};
    MpcInstance inst;
    inst.initial = {{u(rng), u(rng)}, {u(rng), u(rng)}};
    inst.q = 0.2 + 0.6 * unit(rng);
    for (int k = 0; k < 8; ++k) {
      inst.ref_positions.emplace_back(inst.initial.p + 0.5 * Vec2(u(rng), u(rng)));
      inst.ref_velocities.emplace_back(u(rng), u(rng));
    }
    // between one and four real slots, the rest dummies
    const int real = 1 + static_cast<int>(rng() % 4);
    inst.neighbors.assign(kNeighborSlots, std::vector<Vec2>(8, Vec2(kDummyCoordinate, kDummyCoordinate)));
    for (int j = 0; j < real; ++j)
      for (auto &x : inst.neighbors[static_cast<std::size_t>(j)]) x = inst.initial.p + 0.3 * Vec2(u(rng), u(rng));
    // obstacles overlapping the start so some stages are inside
    inst.obstacles.push_back(Obstacle::circle(inst.initial.p + 0.2 * Vec2(u(rng), u(rng)), 0.3 + 0.2 * unit(rng), 0.05));
    const Vec2 lo = inst.initial.p - Vec2(0.4 * unit(rng), 0.4 * unit(rng));
    inst.obstacles.push_back(Obstacle::box(lo, lo + Vec2(0.3 + 0.3 * unit(rng), 0.3 + 0.3 * unit(rng)), 0.05));

    Eigen::VectorXd x(16);
    for (int i = 0; i < 16; ++i) x[i] = 2 * u(rng);
    Multipliers lam = Multipliers::zeros(8, cfg.separation_horizon, kNeighborSlots);
    for (double &l : lam.velocity) l = unit(rng);
    for (double &l : lam.separation) l = unit(rng);
    const Augmentation aug{1.0 + 99.0 * unit(rng), &lam};

    const auto res = constraint_residuals(x, inst, cfg);
    for (double r : res.obstacle) active_obstacle += r > 0;
    const auto states = rollout(inst.initial, x, cfg.dt);
    for (int k = cfg.separation_horizon; k < 8; ++k)
      for (int j = 0; j < real; ++j)
        active_hinge += (states[static_cast<std::size_t>(k)].p - inst.neighbors[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)])
                            .norm() < cfg.separation_radius;

    auto rel = [](const Eigen::VectorXd &g, const Eigen::VectorXd &fd) { return (g - fd).norm() / std::max(1e-8, fd.norm()); };
    const auto fd_cost = oracle::central_difference([&](const Eigen::VectorXd &y) { return total_cost(y, inst, cfg); }, x, 1e-6);
    worst = std::max(worst, rel(cost_gradient(x, inst, cfg), fd_cost));
    Eigen::VectorXd g;
    evaluate_objective(x, inst, cfg, aug, &g);
    const auto fd_aug = oracle::central_difference(
        [&](const Eigen::VectorXd &y) { return evaluate_objective(y, inst, cfg, aug, nullptr); }, x, 1e-6);
    worst = std::max(worst, rel(g, fd_aug));
  }
  std::ostringstream d;
  d << "gradient vs central differences, max rel error " << worst << " (" << active_obstacle
    << " stages inside obstacles, " << active_hinge << " active hinge terms)";
  verdict(3, worst < 1e-5 && active_obstacle > 0 && active_hinge > 0, d.str());
}

void solver_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(-1, 1);
  SolverSettings tight;
  tight.inner_tolerance = 1e-9;
  tight.max_inner_iterations = 20000;
  double worst_x = 0, worst_cost = 0;
  for (int n = 0; n < 50; ++n) {
    MpcConfig cfg;
    cfg.horizon = 1 + static_cast<int>(rng() % 3);
    cfg.separation_horizon = 1;
    cfg.separation_penalty = 0;
    cfg.velocity_box = 1e3;
    cfg.dt = 0.25;
    cfg.input_weight = {0.05 + 0.1 * (u(rng) + 1), 0.05 + 0.1 * (u(rng) + 1)};
    cfg.input_box = 1.0;
    MpcInstance inst;
    inst.initial = {{u(rng), u(rng)}, {u(rng), u(rng)}};
    for (int k = 1; k <= cfg.horizon; ++k) {
      inst.ref_positions.push_back(inst.initial.p + k * cfg.dt * inst.initial.v + Vec2(u(rng), u(rng)));
      inst.ref_velocities.push_back(inst.initial.v + 2 * Vec2(u(rng), u(rng)));
    }
    inst.neighbors.assign(kNeighborSlots, std::vector<Vec2>(static_cast<std::size_t>(cfg.horizon),
                                                            Vec2(kDummyCoordinate, kDummyCoordinate)));
    inst.q = 0.5 + 0.3 * u(rng);
    const auto qp = oracle::tracking_qp(inst.initial.p, inst.initial.v, inst.ref_positions, inst.ref_velocities, inst.q,
                                        cfg.discount, cfg.input_weight, cfg.dt);
    const auto x = oracle::box_qp_active_set(qp.H, qp.g, cfg.input_box);
    const auto out = solve(inst, cfg, Eigen::VectorXd::Zero(2 * cfg.horizon), tight);
    worst_x = std::max(worst_x, (out.inputs - x).lpNorm<Eigen::Infinity>());
    worst_cost = std::max(worst_cost, std::abs(out.cost - (0.5 * x.dot(qp.H * x) + qp.g.dot(x) + qp.c)));
  }
  const double t = seconds_since(start);
  std::ostringstream d;
  d << "solver vs active-set oracle, max input error " << worst_x << ", max cost error " << worst_cost << ", " << t << " s";
  verdict(4, worst_x <= 1e-4 && worst_cost <= 1e-6 && t < 30.0, d.str());
}

// Inside test written from the shape definitions, independent of the h
// components used by the library.
bool oracle_inside(const Obstacle &o, const Vec2 &x) {
  if (o.is_circle()) {
    const auto &c = std::get<Circle>(o.shape);
    const double r = c.radius + o.margin, dx = x.x() - c.center.x(), dy = x.y() - c.center.y();
    return dx * dx + dy * dy < r * r;
  }
  const auto &b = std::get<Box>(o.shape);
  return b.lo.x() - o.margin < x.x() && x.x() < b.hi.x() + o.margin && b.lo.y() - o.margin < x.y() &&
         x.y() < b.hi.y() + o.margin;
}

void residual_equivalence() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> c(-2, 2), s(0.1, 1.5), m(0.0, 0.3), unit(0, 1);
  int mismatches = 0, inside = 0, boundary = 0;
  for (int n = 0; n < 10000; ++n) {
    Obstacle o;
    if (rng() % 2) {
      o = Obstacle::circle({c(rng), c(rng)}, s(rng), m(rng));
    } else {
      const Vec2 lo(c(rng), c(rng));
      o = Obstacle::box(lo, lo + Vec2(s(rng), s(rng)), m(rng));
    }
    Vec2 x(c(rng), c(rng));
    if (!o.is_circle() && n % 5 == 0) {
      // exactly on an enlarged edge
      const auto &b = std::get<Box>(o.shape);
      x.x() = rng() % 2 ? b.hi.x() + o.margin : b.lo.x() - o.margin;
      x.y() = b.lo.y() + unit(rng) * (b.hi.y() - b.lo.y());
      ++boundary;
    }
    const bool in = oracle_inside(o, x);
    inside += in;
    if ((avoidance_residual(o, x) == 0.0) == in) ++mismatches;
  }
  std::ostringstream d;
  d << "residual zero iff outside, 10000 pairs (" << inside << " inside, " << boundary << " on edges), " << mismatches
    << " mismatches";
  verdict(5, mismatches == 0, d.str());
}

bool scenario_outcome(int id, const std::string &name) {
  const auto start = Clock::now();
  const auto cfg = parse_scenario(scenario_path(name));
  const auto r = run(cfg);
  const double t = seconds_since(start);
  const auto &m = r.metrics;
  const double floor = cfg.mpc.separation_radius - 0.05;
  int out_of_range = 0;
  for (const auto &[agent, level] : m.per_step.front().graph_distance) out_of_range += level > 1;
  std::ostringstream d;
  d << name << ", arrived " << (m.arrived ? "true" : "false") << ", nominal intrusions " << m.inside_obstacles
    << ", min converged pairwise " << m.min_pairwise_distance_converged << " (floor " << floor << "), "
    << out_of_range << " followers initially out of leader range, " << m.converged_solves << "/" << m.solves
    << " solves converged, " << t << " s";
  const bool ok = m.arrived && m.inside_obstacles == 0 && m.min_pairwise_distance_converged >= floor && t < 300.0;
  verdict(id, ok, d.str());
  return ok;
}

void ablation_report() {
  bool completed = true;
  std::ostringstream lines;
  int flagged = 0;
  for (const char *name : {"roundabout", "s_shape"})
    for (auto flag : {Ablation::static_q, Ablation::cs_align, Ablation::flat_hierarchy, Ablation::horizon_1}) {
      try {
        const auto cfg = apply_ablation(parse_scenario(scenario_path(name)), flag);
        const auto r = run(cfg);
        const auto metrics_text = metrics_to_json(r.metrics).dump();
        std::vector<AgentId> beyond;
        for (const auto &[agent, dist] : r.metrics.final_distance_to_leader)
          if (dist > cfg.arrival()) beyond.push_back(agent);
        const bool flag_run = !r.metrics.disconnected.empty() || !beyond.empty();
        flagged += flag_run;
        lines << "  " << name << " " << to_string(flag) << ": arrived " << (r.metrics.arrived ? "true" : "false")
              << ", intrusions " << r.metrics.inside_obstacles << ", min pairwise " << r.metrics.min_pairwise_distance
              << ", metrics " << metrics_text.size() << " bytes";
        auto list = [&](const char *label, const std::vector<AgentId> &ids) {
          if (ids.empty()) return;
          lines << ", " << label;
          for (AgentId a : ids) lines << " " << a;
        };
        list("FLAG disconnected:", r.metrics.disconnected);
        list("FLAG beyond arrival radius:", beyond);
        lines << "\n";
      } catch (const std::exception &e) {
        completed = false;
        lines << "  " << name << " " << to_string(flag) << ": aborted: " << e.what() << "\n";
      }
    }
  std::ostringstream d;
  d << "ablation report, 8 runs " << (completed ? "completed" : "did not all complete") << ", " << flagged
    << " flagged (informational)";
  verdict(8, completed, d.str());
  std::cout << lines.str();
}

void determinism() {
  const auto cfg = parse_scenario(scenario_path("roundabout"));
  const auto dir = std::filesystem::temp_directory_path();
  std::string bytes[2];
  for (int i = 0; i < 2; ++i) {
    const auto path = (dir / ("mpcflock_acceptance_" + std::to_string(i) + ".jsonl")).string();
    write_trace(path, run(cfg).trace, {cfg.name, config_digest(cfg)});
    std::ifstream in(path, std::ios::binary);
    bytes[i].assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    std::filesystem::remove(path);
  }
  std::ostringstream d;
  d << "two roundabout runs, trace files of " << bytes[0].size() << " and " << bytes[1].size() << " bytes "
    << (bytes[0] == bytes[1] ? "identical" : "differ");
  verdict(9, !bytes[0].empty() && bytes[0] == bytes[1], d.str());
}

template <class F>
void guarded(int id, F &&f) {
  try {
    f();
  } catch (const std::exception &e) {
    verdict(id, false, std::string("aborted: ") + e.what());
  }
}

}  // namespace

int main() {
  guarded(1, hierarchy_lemma);
  guarded(2, weight_suites);
  guarded(3, gradient_check);
  guarded(4, solver_oracle);
  guarded(5, residual_equivalence);
  guarded(6, [] { scenario_outcome(6, "roundabout"); });
  guarded(7, [] { scenario_outcome(7, "s_shape"); });
  guarded(8, ablation_report);
  guarded(9, determinism);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
