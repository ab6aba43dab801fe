#pragma once

#include "singflow/flow.hpp"

namespace singflow {

/// Orthonormal basis (e1, e2) of the normal plane X(x)^perp at a regular point.
struct NormalFrame {
  Vec3 base = Vec3::Zero();
  Vec3 n = Vec3::UnitZ();  // X(base) / |X(base)|
  Vec3 e1 = Vec3::UnitX();
  Vec3 e2 = Vec3::UnitY();
  double speed = 1.0;

  Vec3 ambient(const Vec2& c) const { return c.x() * e1 + c.y() * e2; }
  Vec2 coords(const Vec3& v) const { return {e1.dot(v), e2.dot(v)}; }
  /// 3x2 matrix with columns e1, e2.
  Eigen::Matrix<double, 3, 2> basis() const {
    Eigen::Matrix<double, 3, 2> b;
    b << e1, e2;
    return b;
  }
};

struct NormalVector {
  NormalFrame frame;
  Vec2 coords = Vec2::Zero();

  Vec3 ambient() const { return frame.ambient(coords); }
};

/// Frame rule: n = X/|X|, u = first of (ex, ey, ez) with |u.n| < 0.9,
/// e1 = normalize(u - (u.n) n), e2 = n x e1.
NormalFrame frame_for_direction(const Vec3& base, const Vec3& x_value);

/// Frame at x; raises SingularPointError when |X(x)| < speed_floor.
NormalFrame normal_frame(const Field& field, const Vec3& x, double speed_floor = kDefaultSpeedFloor);

/// 2x2 coordinate matrix of the projection of `cocycle` between two frames.
Mat2 project_cocycle(const NormalFrame& from, const NormalFrame& to, const Mat3& cocycle);

/// psi_t at x in frame coordinates, with the speed ratio |X(x)| / |X(phi_t x)|.
struct PoincareMap {
  NormalFrame from;
  NormalFrame to;
  Mat2 matrix = Mat2::Identity();
  double speed_ratio = 1.0;

  Mat2 rescaled() const { return speed_ratio * matrix; }
};

PoincareMap linear_poincare_map(const Field& field, const Vec3& x, double t, double tol = kDefaultTol);

NormalVector linear_poincare(const Field& field, const Vec3& x, double t, const NormalVector& v,
                             double tol = kDefaultTol);
NormalVector rescaled_linear_poincare(const Field& field, const Vec3& x, double t,
                                      const NormalVector& v, double tol = kDefaultTol);

struct SectionalOptions {
  double tol = kDefaultTol;
  /// Holonomy radius is holonomy_factor * |X(x)| / (1 + |DX(x)|).
  double holonomy_factor = 0.05;
  /// Crossing-time window half-width around t.
  double window = 0.5;
  /// Minimum |n.X| / |X| at the crossing.
  double min_transversality = 0.1;
};

double holonomy_radius(const Field& field, const Vec3& x, double holonomy_factor = 0.05);

/// P_t(v): the displaced orbit of x + v, stopped on the affine normal plane
/// through phi_t(x) at the crossing closest in time to t inside the window.
NormalVector sectional_poincare(const Field& field, const Vec3& x, double t, const NormalVector& v,
                                const SectionalOptions& opts = {});

/// P*_t(v) = |X(phi_t x)|^{-1} P_t(|X(x)| v).
NormalVector rescaled_sectional_poincare(const Field& field, const Vec3& x, double t,
                                         const NormalVector& v, const SectionalOptions& opts = {});

}  // namespace singflow
