#ifndef MPCFLOCK_GEOMETRY_HPP_
#define MPCFLOCK_GEOMETRY_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <variant>
#include <vector>

#include "types.hpp"

namespace mpcflock {

struct Circle {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
};

/// Axis-aligned rectangle [lo.x, hi.x] x [lo.y, hi.y].
struct Box {
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Ones();
};

/// Open region {x : h(x) < 0 componentwise}, enlarged by `margin` on every side.
struct Obstacle {
  std::variant<Circle, Box> shape;
  double margin = 0.0;

  static Obstacle circle(Vec2 center, double radius, double margin = 0.0) {
    return Obstacle{Circle{center, radius}, margin};
  }
  static Obstacle box(Vec2 lo, Vec2 hi, double margin = 0.0) {
    return Obstacle{Box{lo, hi}, margin};
  }

  bool is_circle() const { return std::holds_alternative<Circle>(shape); }
  int components() const { return is_circle() ? 1 : 4; }

  /// Throws ConfigError on a degenerate shape or negative margin.
  void validate(const std::string &key = "obstacle") const {
    if (!(margin >= 0.0) || !std::isfinite(margin)) throw ConfigError(key, "margin must be >= 0");
    if (const auto *c = std::get_if<Circle>(&shape)) {
      if (!(c->radius > 0.0) || !finite(c->center)) throw ConfigError(key, "circle radius must be > 0");
    } else {
      const auto &b = std::get<Box>(shape);
      if (!finite(b.lo) || !finite(b.hi) || !(b.hi.x() > b.lo.x()) || !(b.hi.y() > b.lo.y()))
        throw ConfigError(key, "rectangle max corner must strictly dominate min corner");
    }
  }
};

struct Environment {
  std::vector<Obstacle> obstacles;
  std::optional<Box> bounds;
};

namespace detail {

struct HValues {
  std::array<double, 4> value{};
  std::array<Vec2, 4> grad{};
  int n = 0;
};

inline HValues evaluate_h(const Obstacle &o, const Vec2 &x, double margin) {
  HValues out;
  if (const auto *c = std::get_if<Circle>(&o.shape)) {
    const Vec2 d = x - c->center;
    const double r = c->radius + margin;
    out.n = 1;
    out.value[0] = d.squaredNorm() - r * r;
    out.grad[0] = 2.0 * d;
  } else {
    const auto &b = std::get<Box>(o.shape);
    out.n = 4;
    out.value = {x.x() - (b.hi.x() + margin), (b.lo.x() - margin) - x.x(),
                 x.y() - (b.hi.y() + margin), (b.lo.y() - margin) - x.y()};
    out.grad = {Vec2(1, 0), Vec2(-1, 0), Vec2(0, 1), Vec2(0, -1)};
  }
  return out;
}

}  // namespace detail

/// Components of h for the enlarged obstacle. Circles use the squared distance
/// so the single component stays smooth at the center.
inline std::vector<double> obstacle_h(const Obstacle &o, const Vec2 &x) {
  const auto hv = detail::evaluate_h(o, x, o.margin);
  return {hv.value.begin(), hv.value.begin() + hv.n};
}

/// (prod_i min{0, h_i(x)})^2 on the enlarged obstacle; zero exactly outside or
/// on the boundary.
inline double avoidance_residual(const Obstacle &o, const Vec2 &x) {
  const auto hv = detail::evaluate_h(o, x, o.margin);
  double prod = 1.0;
  for (int i = 0; i < hv.n; ++i) prod *= std::min(0.0, hv.value[i]);
  return prod * prod;
}

/// Residual together with its gradient with respect to the point.
inline double avoidance_residual(const Obstacle &o, const Vec2 &x, Vec2 &grad) {
  const auto hv = detail::evaluate_h(o, x, o.margin);
  std::array<double, 4> m{};
  double prod = 1.0;
  for (int i = 0; i < hv.n; ++i) {
    m[i] = std::min(0.0, hv.value[i]);
    prod *= m[i];
  }
  grad.setZero();
  if (prod == 0.0) return 0.0;
  // every component is active here, so d min{0,h_i} = dh_i
  for (int i = 0; i < hv.n; ++i) {
    double others = 1.0;
    for (int l = 0; l < hv.n; ++l)
      if (l != i) others *= m[l];
    grad += others * hv.grad[i];
  }
  grad *= 2.0 * prod;
  return prod * prod;
}

inline bool contains(const Obstacle &o, const Vec2 &x, bool use_margin) {
  const auto hv = detail::evaluate_h(o, x, use_margin ? o.margin : 0.0);
  for (int i = 0; i < hv.n; ++i)
    if (!(hv.value[i] < 0.0)) return false;
  return true;
}

/// Euclidean distance from x to the enlarged obstacle; 0 inside.
inline double distance_to(const Obstacle &o, const Vec2 &x) {
  if (const auto *c = std::get_if<Circle>(&o.shape))
    return std::max(0.0, (x - c->center).norm() - (c->radius + o.margin));
  const auto &b = std::get<Box>(o.shape);
  const double dx = std::max({b.lo.x() - o.margin - x.x(), 0.0, x.x() - b.hi.x() - o.margin});
  const double dy = std::max({b.lo.y() - o.margin - x.y(), 0.0, x.y() - b.hi.y() - o.margin});
  return std::hypot(dx, dy);
}

inline bool inside_any(const Environment &env, const Vec2 &x, bool use_margin) {
  for (const auto &o : env.obstacles)
    if (contains(o, x, use_margin)) return true;
  return false;
}

}  // namespace mpcflock

#endif  // MPCFLOCK_GEOMETRY_HPP_
