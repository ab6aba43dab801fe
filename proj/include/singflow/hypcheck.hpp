#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "singflow/chainrec.hpp"
#include "singflow/poincare.hpp"

namespace singflow {

inline constexpr double kDeltaEig = 1e-8;

/// Eigen-decomposition of DX(sigma) and the Lorenz-like test for X and -X.
/// Requires |X(sigma)| < 1e-10.
SingularityRecord classify_singularity(const Field& field, const Vec3& sigma, double delta_eig = kDeltaEig);

enum class FlowKind { tangent, linear_poincare, rescaled_linear_poincare };
std::string to_string(FlowKind kind);

enum class Verdict {
  none,
  dominated,
  contracted,
  area_expanding,
  failed,
  vacuous,
  hyperbolic,
  singular_hyperbolic_attractor,
  singular_hyperbolic_repeller,
  isolated_singularity,
  structural_failure,
};
std::string to_string(Verdict v);

/// A set of boxes of a cover, with point membership.
class ClassRegion {
 public:
  ClassRegion() = default;
  ClassRegion(BoxCover cover, std::vector<std::size_t> boxes);

  const BoxCover& cover() const { return cover_; }
  const std::vector<std::size_t>& boxes() const { return boxes_; }
  bool empty() const { return boxes_.empty(); }
  bool contains_box(std::size_t b) const { return mask_[b] != 0; }
  bool contains(const Vec3& p) const;
  /// p lies in a class box or in a box sharing a face, edge or corner with one.
  bool contains_inflated(const Vec3& p) const;

 private:
  BoxCover cover_;
  std::vector<std::size_t> boxes_;
  std::vector<char> mask_;
};

/// Splitting data at x = phi_T(seed). Directions live in R^3 for the tangent
/// kind and in normal-frame coordinates otherwise. Growth series are indexed
/// by checkpoint j (time (j + 1) * dt after x).
struct SplittingSample {
  Vec3 seed = Vec3::Zero();
  Vec3 point = Vec3::Zero();
  Eigen::MatrixXd e;  // unit column
  Eigen::MatrixXd f;  // orthonormal columns (2 for tangent)
  std::vector<double> log_e;     // log |M_t e|
  std::vector<double> log_f;     // log of the least growth of M_t on F
  std::vector<double> log_area;  // log |det M_t|_F| (tangent only)
};

struct SplittingOptions {
  double dt = 1.0;  // chunk length and checkpoint spacing
  double tol = kDefaultTol;
  double speed_floor = kDefaultSpeedFloor;
  /// When set, seeds whose chunk points leave this class are skipped.
  const ClassRegion* within = nullptr;
  Exec exec = Exec::parallel;
};

/// Least-squares fit series ~ log C - lambda t pooled over samples, followed
/// by the pointwise recheck with (C (1 + slack), lambda (1 - slack)).
struct RateFit {
  double C = 0.0;
  double lambda = 0.0;
  double pass_fraction = 0.0;
  std::size_t n_failures = 0;  // samples violating the recheck somewhere
  bool pass = false;
  double margin = 0.0;  // lambda - lambda_min
};

struct FitOptions {
  double lambda_min = 0.05;
  double slack = 0.1;
  double quantile = 0.99;
};

RateFit fit_rate(const std::vector<std::vector<double>>& series, const std::vector<double>& times,
                 const FitOptions& opts = {});

/// Per sample and checkpoint: whether series[i][j] > log(C(1+slack)) - lambda(1-slack) t_j.
std::vector<std::vector<char>> pointwise_failures(const std::vector<std::vector<double>>& series,
                                                  const std::vector<double>& times, double C,
                                                  double lambda, double slack);

struct SplittingCertificate {
  FlowKind flow_kind = FlowKind::linear_poincare;
  double window = 0.0;
  double dt = 1.0;
  std::vector<double> times;  // checkpoint grid dt, 2 dt, ..., T
  std::vector<SplittingSample> samples;
  std::size_t n_skipped = 0;
  std::optional<RateFit> fitted;
  std::vector<double> checkpoints;
  Verdict verdict = Verdict::none;
};

/// For each seed the orbit is integrated over [0, 3T] in chunks of dt; the
/// sample sits at x = phi_T(seed). F is the dominant direction (2-plane for
/// the tangent kind) pushed forward over [0, T]; E is the most contracted
/// direction pulled back over [T, 3T]. Growth series cover [T, 2T].
SplittingCertificate estimate_splitting(const Field& field, const std::vector<Vec3>& seeds, double T,
                                        FlowKind kind, const SplittingOptions& opts = {});

/// Fills fitted and verdict from the log-ratio log|M_t e| - log m(M_t|F).
SplittingCertificate check_domination(const SplittingCertificate& cert, const std::vector<double>& checkpoints,
                                      const FitOptions& opts = {});

/// Integer checkpoints 1, ..., floor(T) on the certificate grid.
std::vector<double> default_checkpoints(const SplittingCertificate& cert);

struct HyperbolicReport {
  Verdict verdict = Verdict::none;
  RateFit contraction;  // E^s
  RateFit expansion;    // E^u, as decay of the inverse growth
  SplittingCertificate certificate;
};

struct CheckOptions {
  double T = 10.0;
  SplittingOptions splitting;
  FitOptions fit;
  int singularity_grid = 8;
};

/// Raises EmptyClassError for an empty class and WrongCheckerError when the
/// class contains a singularity.
HyperbolicReport check_hyperbolic(const Field& field, const ClassRegion& cls, const std::vector<Vec3>& seeds,
                                  const CheckOptions& opts = {});

enum class Orientation { X, minus_X };

struct WssResult {
  bool pass = false;
  bool escaped = false;
  double r_loc = 0.0;
  double closest_hit = -1.0;  // distance from sigma of the first point inside the class, if any
  std::string note;
};

/// Heuristic: traces both branches of W^ss(sigma) by integrating -X from
/// sigma +- delta v1 and requires every traced point farther than r_loc
/// from sigma to lie outside the class inflated by one box.
WssResult check_strong_stable_disjoint(const Field& field, const SingularityRecord& record,
                                       const ClassRegion& cls, double delta, double max_time = 10.0);

struct SingularHyperbolicReport {
  Verdict verdict = Verdict::none;
  Orientation orientation = Orientation::X;
  std::vector<SingularityRecord> singularities;  // those inside the class
  std::string offending;                         // reason for a structural failure
  RateFit ess_contraction;
  RateFit area_expansion;
  double ess_exponent = 0.0;  // fitted slope of log|M_t e|
  double area_slope = 0.0;    // fitted slope of log|det M_t|_F|
  SplittingCertificate certificate;
};

/// Tangent-kind certificate on the oriented field. Raises WrongCheckerError
/// when the class holds no singularity.
SingularHyperbolicReport check_singular_hyperbolic(const Field& field, const ClassRegion& cls,
                                                   const std::vector<Vec3>& seeds, const CheckOptions& opts = {},
                                                   Orientation orientation = Orientation::X,
                                                   double wss_delta = 1e-6);

struct EquivalenceReport {
  SplittingCertificate tangent;
  SplittingCertificate linear_poincare;
  bool agree = false;
};

EquivalenceReport check_equivalence(const Field& field, const ClassRegion& cls, const std::vector<Vec3>& seeds,
                                    const CheckOptions& opts = {});

struct SeedOptions {
  double transient = 50.0;
  double orbit_time = 200.0;
  std::size_t max_orbit_seeds = 50;
  std::size_t random_boxes = 50;
  std::uint64_t rng_seed = 1;
  double min_spacing = 0.0;  // defaults to 10 h
};

/// One long orbit from the selector (transient discarded, subsampled at
/// spacing >= 10 h, kept only inside the class) plus the centers of random
/// class boxes.
std::vector<Vec3> sample_class_seeds(const Field& field, const ClassRegion& cls, const Vec3& selector,
                                     const SeedOptions& opts = {});

/// Singularities of the field located inside the class.
std::vector<Vec3> singularities_in(const Field& field, const ClassRegion& cls, int grid_n = 8);

}  // namespace singflow
