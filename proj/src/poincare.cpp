#include "singflow/poincare.hpp"

#include <cmath>
#include <limits>

namespace singflow {

NormalFrame frame_for_direction(const Vec3& base, const Vec3& x_value) {
  NormalFrame f;
  f.base = base;
  f.speed = x_value.norm();
  f.n = x_value / f.speed;
  Vec3 u = Vec3::UnitZ();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(f.n[a]) < 0.9) {
      u = Vec3::Unit(a);
      break;
    }
  }
  f.e1 = (u - u.dot(f.n) * f.n).normalized();
  f.e2 = f.n.cross(f.e1);
  return f;
}

NormalFrame normal_frame(const Field& field, const Vec3& x, double speed_floor) {
  const Vec3 v = field.evaluate(x);
  if (!(v.norm() >= speed_floor))
    throw SingularPointError("normal frame requested at a (numerically) singular point");
  return frame_for_direction(x, v);
}

Mat2 project_cocycle(const NormalFrame& from, const NormalFrame& to, const Mat3& cocycle) {
  return to.basis().transpose() * cocycle * from.basis();
}

PoincareMap linear_poincare_map(const Field& field, const Vec3& x, double t, double tol) {
  PoincareMap map;
  map.from = normal_frame(field, x);
  FlowOptions opts;
  opts.tol = tol;
  opts.speed_floor = kDefaultSpeedFloor;
  const TangentState ts = tangent_flow(field, x, t, opts);
  map.to = normal_frame(field, ts.point);
  map.matrix = project_cocycle(map.from, map.to, ts.cocycle);
  map.speed_ratio = map.from.speed / map.to.speed;
  return map;
}

namespace {

void require_based_at(const NormalVector& v, const Vec3& x) {
  if ((v.frame.base - x).norm() > 1e-12 * std::max(1.0, x.norm()))
    throw PreconditionError("normal vector is not based at the requested point");
}

}  // namespace

NormalVector linear_poincare(const Field& field, const Vec3& x, double t, const NormalVector& v,
                             double tol) {
  require_based_at(v, x);
  const PoincareMap map = linear_poincare_map(field, x, t, tol);
  // v may carry a different but equivalent frame; go through the ambient vector.
  return {map.to, map.matrix * map.from.coords(v.ambient())};
}

NormalVector rescaled_linear_poincare(const Field& field, const Vec3& x, double t,
                                      const NormalVector& v, double tol) {
  require_based_at(v, x);
  const PoincareMap map = linear_poincare_map(field, x, t, tol);
  return {map.to, map.rescaled() * map.from.coords(v.ambient())};
}

double holonomy_radius(const Field& field, const Vec3& x, double holonomy_factor) {
  const double speed = field.evaluate(x).norm();
  const double jn = field.jacobian(x).operatorNorm();
  return holonomy_factor * speed / (1.0 + jn);
}

namespace {

struct Crossing {
  double time;
  Vec3 point;
};

/// Root of n.(y(s) - target) inside one accepted step, bracketed on the
/// Hermite interpolant and then polished by Newton on re-integrated states.
Crossing refine_crossing(const Field& field, const DenseStep<3>& step, const Vec3& target,
                         const Vec3& n, double lo, double hi, const FlowOptions& opts) {
  auto g_hermite = [&](double s) { return n.dot(step.at(s) - target); };
  double g_lo = g_hermite(lo);
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double g_mid = g_hermite(mid);
    if ((g_mid <= 0) == (g_lo <= 0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
  }
  double s = 0.5 * (lo + hi);
  Vec3 y = step.at(s);
  for (int iter = 0; iter < 6; ++iter) {
    y = (s == step.t0) ? Vec3(step.y0) : flow(field, step.y0, s - step.t0, opts);
    const double g = n.dot(y - target);
    const double dg = n.dot(field.evaluate(y));
    if (dg == 0.0) break;
    const double ds = g / dg;
    s -= ds;
    if (std::abs(ds) <= 1e-15 * std::max(1.0, std::abs(s))) break;
  }
  y = (s == step.t0) ? Vec3(step.y0) : flow(field, step.y0, s - step.t0, opts);
  return {s, y};
}

}  // namespace

NormalVector sectional_poincare(const Field& field, const Vec3& x, double t, const NormalVector& v,
                                const SectionalOptions& opts) {
  require_based_at(v, x);
  const Vec3 offset = v.ambient();
  const double radius = holonomy_radius(field, x, opts.holonomy_factor);
  if (offset.norm() > radius)
    throw PreconditionError("displacement exceeds the holonomy radius " + std::to_string(radius));
  if (t == 0.0) return v;

  FlowOptions fopts;
  fopts.tol = opts.tol;
  fopts.speed_floor = kDefaultSpeedFloor;
  const Vec3 target = flow(field, x, t, fopts);
  const NormalFrame to = normal_frame(field, target);
  const double dir = t > 0 ? 1.0 : -1.0;
  const double win_lo = dir > 0 ? std::max(0.0, t - opts.window) : t + opts.window;
  const double win_hi = dir > 0 ? t + opts.window : std::min(0.0, t - opts.window);
  // window in integration order: from `first` to `last`
  const double first = dir > 0 ? win_lo : win_hi;
  const double last = dir > 0 ? win_hi : win_lo;
  auto in_order = [dir](double a, double b) { return dir * (b - a) >= 0; };

  std::optional<Crossing> before, after;
  try {
    detail::integrate_path(field, x + offset, last, fopts, [&](const DenseStep<3>& step) {
      if (!in_order(first, step.t1)) return true;
      const double s0 = in_order(first, step.t0) ? step.t0 : first;
      const double g0 = to.n.dot(step.at(s0) - target);
      const double g1 = to.n.dot(step.y1 - target);
      if ((g0 <= 0) != (g1 <= 0) || g0 == 0.0) {
        Crossing c = refine_crossing(field, step, target, to.n, s0, step.t1, fopts);
        if (in_order(c.time, t)) {
          before = c;
        } else {
          after = c;
          return false;
        }
      }
      return true;
    });
  } catch (const RegionEscapeError&) {
    if (!before && !after) throw;
  }
  if (!before && !after)
    throw NoCrossingError("displaced orbit does not cross the target normal plane within the window");
  const Crossing& c = !after ? *before
                      : !before ? *after
                                : (std::abs(before->time - t) <= std::abs(after->time - t) ? *before : *after);
  const Vec3 xv = field.evaluate(c.point);
  if (std::abs(to.n.dot(xv)) < opts.min_transversality * xv.norm())
    throw TangentialCrossingError("displaced orbit crosses the target plane almost tangentially");
  return {to, to.coords(c.point - target)};
}

NormalVector rescaled_sectional_poincare(const Field& field, const Vec3& x, double t,
                                         const NormalVector& v, const SectionalOptions& opts) {
  require_based_at(v, x);
  const double sx = field.evaluate(x).norm();
  NormalVector scaled{v.frame, sx * v.coords};
  NormalVector out = sectional_poincare(field, x, t, scaled, opts);
  out.coords /= out.frame.speed;
  return out;
}

}  // namespace singflow
