#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace singflow {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Axis-aligned box [lo, hi] in phase space.
struct Box3 {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  Vec3 extent() const { return hi - lo; }
  Vec3 center() const { return 0.5 * (lo + hi); }
  double diameter() const { return extent().norm(); }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  /// Grows every face outward by `fraction` of the edge along that axis.
  Box3 inflated(double fraction) const {
    Vec3 pad = fraction * extent();
    return {lo - pad, hi + pad};
  }
  /// Euclidean distance from p to the closed box (0 inside).
  double distance(const Vec3& p) const {
    Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(Vec3::Zero());
    return d.norm();
  }
};

/// One monomial coeff * x^px * y^py * z^pz of a polynomial component.
struct Monomial {
  int px = 0, py = 0, pz = 0;
  double coeff = 0.0;
  int degree() const { return px + py + pz; }
};

enum class FieldKind { lorenz, linear, translation, suspension_saddle, polynomial };

/// A smooth vector field on R^3 with its analytic Jacobian.
///
/// Catalogue entries carry named parameters; polynomial fields carry one
/// monomial list per component (total degree at most 4). A field may be
/// multiplied by a constant (`scaled`), which is how -X is formed.
class Field {
 public:
  static Field lorenz(double sigma = 10.0, double rho = 28.0, double beta = 8.0 / 3.0);
  static Field linear(const Mat3& a);
  static Field translation(const Vec3& v);
  /// Rotation around the z axis with a hyperbolic periodic orbit on the unit
  /// circle whose Floquet multipliers per period are mult_u (radial) and
  /// mult_s (vertical). `stiffness` sharpens the radial/vertical profile away
  /// from the orbit without changing its linearization.
  static Field suspension_saddle(double omega = 1.0, double mult_u = 2.0, double mult_s = 0.5,
                                 double stiffness = 50.0);
  static Field polynomial(std::array<std::vector<Monomial>, 3> components, const Box3& region);
  /// x' = x - x^3, y' = -y, z' = -z: sinks at (+-1, 0, 0), saddle at 0.
  static Field double_sink();

  /// Builds a catalogue entry by name from a parameter map; unknown names or
  /// parameters raise ConfigError naming the offender.
  static Field from_catalogue(const std::string& name, const std::map<std::string, double>& params);

  Vec3 operator()(const Vec3& x) const { return evaluate(x); }
  Vec3 evaluate(const Vec3& x) const;
  Mat3 jacobian(const Vec3& x) const;
  /// Unchecked variants for integrator inner loops; may return non-finite values.
  Vec3 evaluate_unchecked(const Vec3& x) const { return scale_ * raw_evaluate(x); }
  Mat3 jacobian_unchecked(const Vec3& x) const { return scale_ * raw_jacobian(x); }

  /// c * X. Orbits are reparametrized, singularities are unchanged.
  Field scaled(double c) const;
  Field reversed() const { return scaled(-1.0); }

  FieldKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const std::map<std::string, double>& params() const { return params_; }
  const Box3& region() const { return region_; }
  void set_region(const Box3& r) { region_ = r; }
  double scale() const { return scale_; }
  const std::array<std::vector<Monomial>, 3>& monomials() const { return poly_; }
  const Mat3& matrix() const { return a_; }

 private:
  Field() = default;

  Vec3 raw_evaluate(const Vec3& x) const;
  Mat3 raw_jacobian(const Vec3& x) const;

  FieldKind kind_ = FieldKind::linear;
  std::string name_;
  std::map<std::string, double> params_;
  Box3 region_;
  double scale_ = 1.0;
  Mat3 a_ = Mat3::Zero();  // linear
  Vec3 v_ = Vec3::Zero();  // translation
  std::array<double, 4> c_{};  // cached catalogue coefficients
  std::array<std::vector<Monomial>, 3> poly_;
};

/// Parses a field specification document:
/// { "kind": "catalogue"|"polynomial", "name": ..., "params": {...},
///   "coefficients": [...], "region": [[xmin,xmax],[ymin,ymax],[zmin,zmax]] }
/// Polynomial coefficients are one list per component of [px, py, pz, c]
/// entries; c may be a number or a string such as "8/3" or "-0.25".
Field parse_field_spec(const std::string& json_text);

/// Parses "a/b" or a decimal literal.
double parse_rational(const std::string& text);

/// Parses "k=v,k=v"; raises ConfigError naming the malformed entry.
std::map<std::string, double> parse_params(const std::string& text);

/// Parses "xmin,xmax,ymin,ymax,zmin,zmax".
Box3 parse_region(const std::string& text);

}  // namespace singflow
