#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "singflow/errors.hpp"
#include "singflow/field.hpp"
#include "singflow/integrator.hpp"

namespace singflow {

inline constexpr double kDefaultTol = 1e-9;
inline constexpr double kDefaultSpeedFloor = 1e-8;

struct FlowOptions {
  double tol = kDefaultTol;
  /// Escape is declared outside region().inflated(escape_margin).
  double escape_margin = 1.0;
  /// When positive, dropping below this speed raises ProximityTruncationError.
  double speed_floor = 0.0;
  std::size_t max_steps = 20'000'000;
};

/// phi_t(x). t may be negative.
Vec3 flow(const Field& field, const Vec3& x, double t, double tol = kDefaultTol);
Vec3 flow(const Field& field, const Vec3& x, double t, const FlowOptions& opts);

struct TangentState {
  Vec3 point;
  Mat3 cocycle;  // D phi_t(x)
};

/// (phi_t(x), D phi_t(x)) from the coupled variational equation M' = DX M.
TangentState tangent_flow(const Field& field, const Vec3& x, double t, double tol = kDefaultTol);
TangentState tangent_flow(const Field& field, const Vec3& x, double t, const FlowOptions& opts);

namespace detail {

struct VariationalRhs {
  const Field* field;
  State<12> operator()(const State<12>& y) const {
    const Vec3 p = y.head<3>();
    State<12> out;
    out.head<3>() = field->evaluate_unchecked(p);
    Eigen::Map<Mat3>(out.data() + 3) = field->jacobian_unchecked(p) * Eigen::Map<const Mat3>(y.data() + 3);
    return out;
  }
};

}  // namespace detail

/// Stateful integrator of (phi_t(x), D phi_t(x)) that can be advanced through
/// successive output times while keeping its step-size history.
class TangentIntegrator {
 public:
  TangentIntegrator(const Field& field, const Vec3& x, const FlowOptions& opts = {});

  /// Advances to absolute time t (same direction as previous calls).
  void advance_to(double t);
  /// As advance_to, invoking on_step(const DenseStep<12>&) after each accepted
  /// step; returning false stops at that step.
  template <class OnStep>
  bool advance_to(double t, OnStep&& on_step);

  double time() const { return time_; }
  Vec3 point() const { return state_.head<3>(); }
  Mat3 cocycle() const { return Eigen::Map<const Mat3>(state_.data() + 3); }
  /// Restarts the cocycle from the identity at the current point.
  void reset_cocycle();

 private:
  const Field* field_;
  FlowOptions opts_;
  Box3 escape_box_;
  Dopri5<12, detail::VariationalRhs> stepper_;
  double time_ = 0.0;
  State<12> state_;
};

/// Samples of an orbit and of its tangent cocycle at multiples of dt_out.
struct OrbitSegment {
  Vec3 seed = Vec3::Zero();
  std::vector<double> times;
  std::vector<Vec3> points;
  std::vector<Mat3> cocycle;  // D phi_{times[i]}(seed)
  std::vector<double> speed;
  bool truncated = false;
  double truncation_time = 0.0;
};

OrbitSegment sample_orbit(const Field& field, const Vec3& seed, double T, double dt_out,
                          double tol = kDefaultTol, double speed_floor = kDefaultSpeedFloor);

/// Zero of the field. Spectral data is filled in by classify_singularity.
struct SingularityRecord {
  enum class Kind { unclassified, lorenz_like_for_X, lorenz_like_for_minus_X, hyperbolic_other, non_hyperbolic };

  Vec3 position = Vec3::Zero();
  bool non_hyperbolic_candidate = false;  // DX not invertible at the root
  Kind classification = Kind::unclassified;
  std::vector<std::complex<double>> eigenvalues;  // sorted by real part
  std::vector<Vec3> eigenvectors;                 // only when the spectrum is real
  bool resolution_flag = false;                   // an inequality held only within delta_eig
  bool non_diagonalizable = false;
  std::optional<bool> wss_check;
};

std::string to_string(SingularityRecord::Kind kind);

/// Newton iteration from grid_n^3 seeds over the field region; roots are
/// deduplicated with merge radius 1e-6 * region diameter and returned in
/// lexicographic order.
std::vector<SingularityRecord> find_singularities(const Field& field, int grid_n);

namespace detail {

/// Integrates the position only, calling on_step for each accepted step.
/// Escape and proximity conditions are raised as errors. Returns the final
/// point (or the point where on_step stopped the integration).
template <class OnStep>
Vec3 integrate_path(const Field& field, const Vec3& x, double t, const FlowOptions& opts,
                    OnStep&& on_step);

}  // namespace detail

}  // namespace singflow

#include "singflow/flow_impl.hpp"
