#include "singflow/flow.hpp"

#include <algorithm>
#include <cmath>

namespace singflow {

TangentIntegrator::TangentIntegrator(const Field& field, const Vec3& x, const FlowOptions& opts)
    : field_(&field),
      opts_(opts),
      escape_box_(field.region().inflated(opts.escape_margin)),
      stepper_(detail::VariationalRhs{&field}, opts.tol, opts.max_steps) {
  if (!x.allFinite()) throw EvaluationDomainError("initial point is not finite");
  state_.head<3>() = x;
  reset_cocycle();
}

void TangentIntegrator::advance_to(double t) {
  advance_to(t, [](const DenseStep<12>&) { return true; });
}

void TangentIntegrator::reset_cocycle() { Eigen::Map<Mat3>(state_.data() + 3).setIdentity(); }

Vec3 flow(const Field& field, const Vec3& x, double t, const FlowOptions& opts) {
  return detail::integrate_path(field, x, t, opts, [](const DenseStep<3>&) { return true; });
}

Vec3 flow(const Field& field, const Vec3& x, double t, double tol) {
  FlowOptions opts;
  opts.tol = tol;
  return flow(field, x, t, opts);
}

TangentState tangent_flow(const Field& field, const Vec3& x, double t, const FlowOptions& opts) {
  TangentIntegrator integ(field, x, opts);
  integ.advance_to(t);
  return {integ.point(), integ.cocycle()};
}

TangentState tangent_flow(const Field& field, const Vec3& x, double t, double tol) {
  FlowOptions opts;
  opts.tol = tol;
  return tangent_flow(field, x, t, opts);
}

OrbitSegment sample_orbit(const Field& field, const Vec3& seed, double T, double dt_out,
                          double tol, double speed_floor) {
  if (!(T > 0)) throw PreconditionError("sample_orbit: T must be positive");
  if (!(dt_out > 0)) throw PreconditionError("sample_orbit: dt_out must be positive");
  OrbitSegment seg;
  seg.seed = seed;
  const double seed_speed = field.evaluate(seed).norm();
  if (seed_speed < speed_floor) {
    seg.truncated = true;
    return seg;
  }
  FlowOptions opts;
  opts.tol = tol;
  opts.speed_floor = speed_floor;
  TangentIntegrator integ(field, seed, opts);
  const auto n_out = static_cast<std::size_t>(std::floor(T / dt_out + 1e-9));
  seg.times.reserve(n_out + 1);
  auto record = [&](double t) {
    seg.times.push_back(t);
    seg.points.push_back(integ.point());
    seg.cocycle.push_back(integ.cocycle());
    seg.speed.push_back(field.evaluate(integ.point()).norm());
  };
  record(0.0);
  for (std::size_t k = 1; k <= n_out; ++k) {
    const double t = static_cast<double>(k) * dt_out;
    try {
      integ.advance_to(t);
    } catch (const ProximityTruncationError& e) {
      seg.truncated = true;
      seg.truncation_time = e.time();
      break;
    }
    record(t);
  }
  return seg;
}

std::string to_string(SingularityRecord::Kind kind) {
  switch (kind) {
    case SingularityRecord::Kind::unclassified: return "unclassified";
    case SingularityRecord::Kind::lorenz_like_for_X: return "lorenz_like_for_X";
    case SingularityRecord::Kind::lorenz_like_for_minus_X: return "lorenz_like_for_minus_X";
    case SingularityRecord::Kind::hyperbolic_other: return "hyperbolic_other";
    case SingularityRecord::Kind::non_hyperbolic: return "non_hyperbolic";
  }
  return "unknown";
}

namespace {

constexpr double kRootTolerance = 1e-10;

std::optional<Vec3> newton_root(const Field& field, Vec3 x) {
  Vec3 fx = field.evaluate_unchecked(x);
  double res = fx.norm();
  for (int iter = 0; iter < 80 && std::isfinite(res); ++iter) {
    if (res < kRootTolerance) break;
    Eigen::FullPivLU<Mat3> lu(field.jacobian_unchecked(x));
    if (!lu.isInvertible()) return std::nullopt;
    const Vec3 dx = lu.solve(fx);
    double alpha = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
      Vec3 trial = x - alpha * dx;
      Vec3 ft = field.evaluate_unchecked(trial);
      if (ft.allFinite() && ft.norm() < res) {
        x = trial;
        fx = ft;
        res = ft.norm();
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (!(res < kRootTolerance)) return std::nullopt;
  return x;
}

}  // namespace

std::vector<SingularityRecord> find_singularities(const Field& field, int grid_n) {
  if (grid_n < 2) throw PreconditionError("find_singularities: grid_n must be at least 2");
  const Box3& region = field.region();
  const double merge = 1e-6 * region.diameter();
  const Box3 accept = region.inflated(1e-9);
  std::vector<Vec3> roots;
  for (int i = 0; i < grid_n; ++i)
    for (int j = 0; j < grid_n; ++j)
      for (int k = 0; k < grid_n; ++k) {
        Vec3 frac((i + 0.5) / grid_n, (j + 0.5) / grid_n, (k + 0.5) / grid_n);
        Vec3 seed = region.lo + frac.cwiseProduct(region.extent());
        auto root = newton_root(field, seed);
        if (!root || !accept.contains(*root)) continue;
        bool dup = std::any_of(roots.begin(), roots.end(),
                               [&](const Vec3& r) { return (r - *root).norm() < merge; });
        if (!dup) roots.push_back(*root);
      }
  std::sort(roots.begin(), roots.end(), [](const Vec3& a, const Vec3& b) {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
  });
  std::vector<SingularityRecord> out;
  for (const Vec3& r : roots) {
    SingularityRecord rec;
    rec.position = r;
    Eigen::JacobiSVD<Mat3> svd(field.jacobian(r));
    const auto& sv = svd.singularValues();
    rec.non_hyperbolic_candidate = sv(2) <= 1e-12 * std::max(1.0, sv(0));
    out.push_back(rec);
  }
  return out;
}

}  // namespace singflow
