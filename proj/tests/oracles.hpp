// Independent reference computations used only by the tests.
#ifndef MPCFLOCK_TESTS_ORACLES_HPP_
#define MPCFLOCK_TESTS_ORACLES_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <vector>

namespace oracle {

/// Central differences of a scalar function.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd &)> &f,
                                          const Eigen::VectorXd &x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

/// Graph distance from a leader set, capped; plain BFS over adjacency lists.
inline std::vector<int> capped_bfs(const std::vector<std::vector<int>> &adj, const std::vector<bool> &leader, int cap) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> dist(static_cast<std::size_t>(n), -1);
  std::queue<int> q;
  for (int i = 0; i < n; ++i)
    if (leader[static_cast<std::size_t>(i)]) {
      dist[static_cast<std::size_t>(i)] = 0;
      q.push(i);
    }
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[static_cast<std::size_t>(u)])
      if (dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        q.push(v);
      }
  }
  for (int &d : dist) d = (d < 0 || d > cap) ? cap : d;
  return dist;
}

/// Exact minimizer of 1/2 x'Hx + g'x over |x_i| <= r by enumerating every
/// assignment of {lower, free, upper} and checking the KKT conditions.
/// Requires H positive definite and a small dimension.
inline Eigen::VectorXd box_qp_active_set(const Eigen::MatrixXd &H, const Eigen::VectorXd &g, double r) {
  const int n = static_cast<int>(g.size());
  long combos = 1;
  for (int i = 0; i < n; ++i) combos *= 3;
  std::optional<Eigen::VectorXd> best;
  double best_value = std::numeric_limits<double>::infinity();
  for (long code = 0; code < combos; ++code) {
    std::vector<int> state(static_cast<std::size_t>(n));
    long c = code;
    for (int i = 0; i < n; ++i, c /= 3) state[static_cast<std::size_t>(i)] = static_cast<int>(c % 3) - 1;  // -1 lo, 0 free, 1 hi
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<int> free;
    for (int i = 0; i < n; ++i) {
      if (state[static_cast<std::size_t>(i)] == 0) free.push_back(i);
      else x[i] = state[static_cast<std::size_t>(i)] * r;
    }
    if (!free.empty()) {
      const int m = static_cast<int>(free.size());
      Eigen::MatrixXd Hff(m, m);
      Eigen::VectorXd rhs(m);
      for (int a = 0; a < m; ++a) {
        rhs[a] = -g[free[static_cast<std::size_t>(a)]];
        for (int i = 0; i < n; ++i)
          if (state[static_cast<std::size_t>(i)] != 0) rhs[a] -= H(free[static_cast<std::size_t>(a)], i) * x[i];
        for (int b = 0; b < m; ++b) Hff(a, b) = H(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
      }
      const Eigen::VectorXd xf = Hff.ldlt().solve(rhs);
      for (int a = 0; a < m; ++a) x[free[static_cast<std::size_t>(a)]] = xf[a];
    }
    // primal feasibility and multiplier signs
    const Eigen::VectorXd grad = H * x + g;
    bool ok = true;
    const double eps = 1e-9;
    for (int i = 0; i < n && ok; ++i) {
      const int s = state[static_cast<std::size_t>(i)];
      if (s == 0) ok = std::abs(x[i]) <= r + eps;
      else if (s == 1) ok = grad[i] <= eps;   // at upper bound the gradient must push outward
      else ok = grad[i] >= -eps;
    }
    if (!ok) continue;
    const double value = 0.5 * x.dot(H * x) + g.dot(x);
    if (value < best_value) {
      best_value = value;
      best = x;
    }
  }
  return *best;
}


/// Quadratic model 1/2 x'Hx + g'x + c of the tracking-plus-input cost for a
/// double integrator, built from explicit transition matrices.
struct TrackingQp {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  double c = 0.0;
};

inline TrackingQp tracking_qp(const Eigen::Vector2d &p0, const Eigen::Vector2d &v0,
                              const std::vector<Eigen::Vector2d> &pref, const std::vector<Eigen::Vector2d> &vref,
                              double q, double gamma, const Eigen::Vector2d &R, double dt) {
  const int T = static_cast<int>(pref.size());
  const int n = 2 * T;
  TrackingQp qp{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n), 0.0};
  for (int m = 0; m < T; ++m) {
    qp.H(2 * m, 2 * m) += 2 * R.x();
    qp.H(2 * m + 1, 2 * m + 1) += 2 * R.y();
  }
  for (int k = 0; k < T; ++k) {
    // p_k = A_k u + a_k, v_k = B_k u + b_k
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, n), B = Eigen::MatrixXd::Zero(2, n);
    for (int m = 0; m <= k; ++m) {
      A.block(0, 2 * m, 2, 2) = (k - m + 0.5) * dt * dt * Eigen::Matrix2d::Identity();
      B.block(0, 2 * m, 2, 2) = dt * Eigen::Matrix2d::Identity();
    }
    const Eigen::Vector2d a = p0 + (k + 1) * dt * v0 - pref[static_cast<std::size_t>(k)];
    const Eigen::Vector2d b = v0 - vref[static_cast<std::size_t>(k)];
    const double w = std::pow(gamma, k);
    qp.H += 2 * w * ((1 - q) * A.transpose() * A + q * B.transpose() * B);
    qp.g += 2 * w * ((1 - q) * A.transpose() * a + q * B.transpose() * b);
    qp.c += w * ((1 - q) * a.squaredNorm() + q * b.squaredNorm());
  }
  return qp;
}

}  // namespace oracle

#endif  // MPCFLOCK_TESTS_ORACLES_HPP_
