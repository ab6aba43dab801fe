#include "singflow/hypcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace singflow {

namespace {

bool lorenz_chain(const std::array<double, 3>& l, double delta, bool& within_resolution) {
  // l1 < l2 < 0 < -l2 < l3
  const std::array<double, 4> gaps{l[1] - l[0], -l[1], l[2] + l[1], l[2]};
  bool ordered = true, strict = true;
  for (double g : gaps) {
    if (!(g > -delta)) ordered = false;
    if (!(g > delta)) strict = false;
  }
  within_resolution = ordered && !strict;
  return strict;
}

std::string format_point(const Vec3& p) {
  std::ostringstream os;
  os.precision(6);
  os << "(" << p.x() << ", " << p.y() << ", " << p.z() << ")";
  return os.str();
}

}  // namespace

SingularityRecord classify_singularity(const Field& field, const Vec3& sigma, double delta_eig) {
  if (!(field.evaluate(sigma).norm() < 1e-10))
    throw PreconditionError("classify_singularity: |X(sigma)| must be below 1e-10 at " + format_point(sigma));
  SingularityRecord rec;
  rec.position = sigma;
  const Mat3 J = field.jacobian(sigma);
  Eigen::EigenSolver<Mat3> es(J);
  std::array<int, 3> order{0, 1, 2};
  const auto ev = es.eigenvalues();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (ev(a).real() != ev(b).real()) return ev(a).real() < ev(b).real();
    return ev(a).imag() < ev(b).imag();
  });
  bool real = true;
  for (int i : order) {
    rec.eigenvalues.push_back(ev(i));
    if (std::abs(ev(i).imag()) >= delta_eig) real = false;
  }
  const auto V = es.eigenvectors();
  Eigen::Matrix3cd Vn;
  for (int c = 0; c < 3; ++c) Vn.col(c) = V.col(order[c]).normalized();
  rec.non_diagonalizable = std::abs(Vn.determinant()) < 1e-6;
  if (real) {
    for (int c = 0; c < 3; ++c) {
      Vec3 v = Vn.col(c).real();
      if (v.norm() < 1e-12) v = Vn.col(c).imag();
      rec.eigenvectors.push_back(v.normalized());
    }
  }

  bool near_zero = false;
  for (const auto& l : rec.eigenvalues) near_zero |= std::abs(l.real()) < delta_eig;
  if (near_zero) {
    rec.classification = SingularityRecord::Kind::non_hyperbolic;
    return rec;
  }
  rec.classification = SingularityRecord::Kind::hyperbolic_other;
  if (!real) return rec;
  const std::array<double, 3> l{rec.eigenvalues[0].real(), rec.eigenvalues[1].real(), rec.eigenvalues[2].real()};
  const std::array<double, 3> neg{-l[2], -l[1], -l[0]};
  bool res_x = false, res_minus = false;
  if (lorenz_chain(l, delta_eig, res_x))
    rec.classification = SingularityRecord::Kind::lorenz_like_for_X;
  else if (lorenz_chain(neg, delta_eig, res_minus))
    rec.classification = SingularityRecord::Kind::lorenz_like_for_minus_X;
  rec.resolution_flag = res_x || res_minus;
  return rec;
}

std::string to_string(FlowKind kind) {
  switch (kind) {
    case FlowKind::tangent: return "tangent";
    case FlowKind::linear_poincare: return "linear_poincare";
    case FlowKind::rescaled_linear_poincare: return "rescaled_linear_poincare";
  }
  return "unknown";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::none: return "none";
    case Verdict::dominated: return "dominated";
    case Verdict::contracted: return "contracted";
    case Verdict::area_expanding: return "area_expanding";
    case Verdict::failed: return "failed";
    case Verdict::vacuous: return "vacuous";
    case Verdict::hyperbolic: return "hyperbolic";
    case Verdict::singular_hyperbolic_attractor: return "singular_hyperbolic_attractor";
    case Verdict::singular_hyperbolic_repeller: return "singular_hyperbolic_repeller";
    case Verdict::isolated_singularity: return "isolated_singularity";
    case Verdict::structural_failure: return "structural_failure";
  }
  return "unknown";
}

ClassRegion::ClassRegion(BoxCover cover, std::vector<std::size_t> boxes)
    : cover_(std::move(cover)), boxes_(std::move(boxes)), mask_(cover_.box_count(), 0) {
  std::sort(boxes_.begin(), boxes_.end());
  boxes_.erase(std::unique(boxes_.begin(), boxes_.end()), boxes_.end());
  for (std::size_t b : boxes_) {
    if (b >= mask_.size()) throw PreconditionError("class box index out of range");
    mask_[b] = 1;
  }
}

bool ClassRegion::contains(const Vec3& p) const {
  const auto b = cover_.locate(p);
  return b && mask_[*b];
}

bool ClassRegion::contains_inflated(const Vec3& p) const {
  const Box3& r = cover_.region();
  for (int a = 0; a < 3; ++a)
    if (!(p[a] >= r.lo[a] - cover_.h()[a] && p[a] <= r.hi[a] + cover_.h()[a])) return false;
  std::array<int, 3> c;
  for (int a = 0; a < 3; ++a) c[a] = cover_.axis_cell(a, p[a]);
  const auto& n = cover_.counts();
  for (int dk = -1; dk <= 1; ++dk)
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const int i = c[0] + di, j = c[1] + dj, k = c[2] + dk;
        if (i < 0 || j < 0 || k < 0 || i >= n[0] || j >= n[1] || k >= n[2]) continue;
        if (mask_[cover_.index(i, j, k)]) return true;
      }
  return false;
}

namespace {

int grid_count(double T, double dt) {
  if (!(T > 0)) throw PreconditionError("window must be positive");
  if (!(dt > 0)) throw PreconditionError("chunk length must be positive");
  const double k = std::round(T / dt);
  if (k < 1 || std::abs(k * dt - T) > 1e-9 * T) throw PreconditionError("window must be a multiple of dt");
  return static_cast<int>(k);
}

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
}

std::optional<SplittingSample> splitting_for_seed(const Field& field, const Vec3& seed, int K, FlowKind kind,
                                                  const SplittingOptions& opts) {
  if (field.evaluate(seed).norm() < opts.speed_floor) return std::nullopt;
  if (opts.within && !opts.within->contains(seed)) return std::nullopt;
  FlowOptions fo;
  fo.tol = opts.tol;
  fo.speed_floor = opts.speed_floor;
  const int chunks = 3 * K;
  const int d = kind == FlowKind::tangent ? 3 : 2;
  const int q = kind == FlowKind::tangent ? 2 : 1;
  std::vector<Eigen::MatrixXd> A(chunks);
  Vec3 x = seed;
  try {
    TangentIntegrator integ(field, seed, fo);
    NormalFrame prev_frame = frame_for_direction(seed, field.evaluate(seed));
    for (int k = 0; k < chunks; ++k) {
      integ.advance_to((k + 1) * opts.dt);
      const Mat3 M = integ.cocycle();
      integ.reset_cocycle();
      const Vec3 p = integ.point();
      if (opts.within && !opts.within->contains(p)) return std::nullopt;
      if (kind == FlowKind::tangent) {
        A[k] = M;
      } else {
        const NormalFrame frame = frame_for_direction(p, field.evaluate(p));
        Mat2 a = project_cocycle(prev_frame, frame, M);
        if (kind == FlowKind::rescaled_linear_poincare) a *= prev_frame.speed / frame.speed;
        A[k] = a;
        prev_frame = frame;
      }
      if (k + 1 == K) x = p;
    }
  } catch (const NumericalError&) {
    return std::nullopt;
  } catch (const SingularPointError&) {
    return std::nullopt;
  }

  SplittingSample s;
  s.seed = seed;
  s.point = x;

  // F: dominant q-dimensional subspace pushed forward over the past window.
  Eigen::MatrixXd Q(d, q);
  if (d == 3)
    Q << 0.8, 0.1, 0.3, 0.9, 0.5, 0.4;
  else
    Q << 0.7, 0.3;
  Q = orthonormal_columns(Q);
  for (int k = 0; k < K; ++k) Q = orthonormal_columns(A[k] * Q);
  s.f = Q;

  Eigen::MatrixXd Y = Q;
  double log_scale = 0.0;
  for (int j = 0; j < K; ++j) {
    Y = A[K + j] * Y;
    const double n = Y.norm();
    Y /= n;
    log_scale += std::log(n);
    if (q == 1) {
      s.log_f.push_back(log_scale + std::log(Y.norm()));
    } else {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(Y);
      const auto sv = svd.singularValues();
      s.log_f.push_back(log_scale + std::log(sv(1)));
      s.log_area.push_back(2 * log_scale + std::log(sv(0) * sv(1)));
    }
  }

  // E: most contracted direction pulled back from 3T to T.
  Eigen::VectorXd w(d);
  if (d == 3)
    w << 0.3, 0.5, 0.8;
  else
    w << 0.3, 0.7;
  w.normalize();
  std::vector<double> log_g(chunks, 0.0);
  for (int k = chunks - 1; k >= K; --k) {
    w = A[k].partialPivLu().solve(w);
    const double g = w.norm();
    w /= g;
    log_g[k] = std::log(g);
  }
  s.e = w;
  double acc = 0.0;
  for (int j = 0; j < K; ++j) {
    acc -= log_g[K + j];
    s.log_e.push_back(acc);
  }
  for (double v : s.log_e)
    if (!std::isfinite(v)) return std::nullopt;
  for (double v : s.log_f)
    if (!std::isfinite(v)) return std::nullopt;
  return s;
}

}  // namespace

SplittingCertificate estimate_splitting(const Field& field, const std::vector<Vec3>& seeds, double T,
                                        FlowKind kind, const SplittingOptions& opts) {
  const int K = grid_count(T, opts.dt);
  SplittingCertificate cert;
  cert.flow_kind = kind;
  cert.window = T;
  cert.dt = opts.dt;
  for (int j = 0; j < K; ++j) cert.times.push_back((j + 1) * opts.dt);

  std::vector<std::optional<SplittingSample>> out(seeds.size());
  const auto n = static_cast<std::ptrdiff_t>(seeds.size());
  if (opts.exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = splitting_for_seed(field, seeds[i], K, kind, opts);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = splitting_for_seed(field, seeds[i], K, kind, opts);
  }
  for (auto& s : out) {
    if (s)
      cert.samples.push_back(std::move(*s));
    else
      ++cert.n_skipped;
  }
  return cert;
}

std::vector<std::vector<char>> pointwise_failures(const std::vector<std::vector<double>>& series,
                                                  const std::vector<double>& times, double C, double lambda,
                                                  double slack) {
  const double log_bound = std::log(C * (1 + slack));
  std::vector<std::vector<char>> fails(series.size(), std::vector<char>(times.size(), 0));
  for (std::size_t i = 0; i < series.size(); ++i)
    for (std::size_t j = 0; j < times.size(); ++j)
      fails[i][j] = series[i][j] > log_bound - lambda * (1 - slack) * times[j];
  return fails;
}

RateFit fit_rate(const std::vector<std::vector<double>>& series, const std::vector<double>& times,
                 const FitOptions& opts) {
  if (times.size() < 3) throw InsufficientDataError("at least 3 checkpoints are required");
  if (series.empty()) throw InsufficientDataError("no samples to fit");
  double st = 0, sy = 0, stt = 0, sty = 0, count = 0;
  for (const auto& row : series)
    for (std::size_t j = 0; j < times.size(); ++j) {
      st += times[j];
      sy += row[j];
      stt += times[j] * times[j];
      sty += times[j] * row[j];
      count += 1;
    }
  const double denom = count * stt - st * st;
  const double slope = (count * sty - st * sy) / denom;
  const double intercept = (sy - slope * st) / count;
  RateFit fit;
  fit.lambda = -slope;
  fit.C = std::exp(intercept);
  const auto fails = pointwise_failures(series, times, fit.C, fit.lambda, opts.slack);
  for (const auto& row : fails)
    if (std::any_of(row.begin(), row.end(), [](char c) { return c != 0; })) ++fit.n_failures;
  fit.pass_fraction = 1.0 - static_cast<double>(fit.n_failures) / static_cast<double>(series.size());
  fit.margin = fit.lambda - opts.lambda_min;
  fit.pass = fit.lambda > opts.lambda_min && fit.pass_fraction >= opts.quantile;
  return fit;
}

namespace {

std::vector<std::size_t> checkpoint_indices(const SplittingCertificate& cert, const std::vector<double>& checkpoints) {
  if (checkpoints.size() < 3) throw InsufficientDataError("at least 3 checkpoints are required");
  std::vector<std::size_t> idx;
  for (double t : checkpoints) {
    if (!(t > 0 && t <= cert.window * (1 + 1e-12)))
      throw PreconditionError("checkpoints must lie in (0, T]");
    const double k = std::round(t / cert.dt);
    if (std::abs(k * cert.dt - t) > 1e-9 * std::max(1.0, t))
      throw PreconditionError("checkpoint is not on the certificate grid");
    idx.push_back(static_cast<std::size_t>(k) - 1);
  }
  return idx;
}

std::vector<std::vector<double>> select(const SplittingCertificate& cert, const std::vector<std::size_t>& idx,
                                        double sign_e, double sign_f, bool area) {
  std::vector<std::vector<double>> out;
  for (const auto& s : cert.samples) {
    std::vector<double> row;
    for (std::size_t j : idx) {
      if (area)
        row.push_back(sign_f * s.log_area[j]);
      else
        row.push_back((sign_e != 0 ? sign_e * s.log_e[j] : 0.0) + (sign_f != 0 ? sign_f * s.log_f[j] : 0.0));
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<double> times_at(const SplittingCertificate& cert, const std::vector<std::size_t>& idx) {
  std::vector<double> t;
  for (std::size_t j : idx) t.push_back(cert.times[j]);
  return t;
}

}  // namespace

std::vector<double> default_checkpoints(const SplittingCertificate& cert) {
  std::vector<double> out;
  for (double t : cert.times)
    if (std::abs(t - std::round(t)) < 1e-9) out.push_back(std::round(t));
  return out;
}

SplittingCertificate check_domination(const SplittingCertificate& cert, const std::vector<double>& checkpoints,
                                      const FitOptions& opts) {
  SplittingCertificate out = cert;
  const auto idx = checkpoint_indices(cert, checkpoints);
  out.checkpoints = checkpoints;
  if (cert.samples.empty()) {
    out.verdict = Verdict::vacuous;
    return out;
  }
  out.fitted = fit_rate(select(cert, idx, 1.0, -1.0, false), times_at(cert, idx), opts);
  out.verdict = out.fitted->pass ? Verdict::dominated : Verdict::failed;
  return out;
}

std::vector<Vec3> singularities_in(const Field& field, const ClassRegion& cls, int grid_n) {
  std::vector<Vec3> out;
  for (const auto& rec : find_singularities(field, grid_n))
    if (cls.contains(rec.position)) out.push_back(rec.position);
  return out;
}

HyperbolicReport check_hyperbolic(const Field& field, const ClassRegion& cls, const std::vector<Vec3>& seeds,
                                  const CheckOptions& opts) {
  if (cls.empty()) throw EmptyClassError("class is empty");
  const auto sing = singularities_in(field, cls, opts.singularity_grid);
  if (!sing.empty())
    throw WrongCheckerError("class contains the singularity " + format_point(sing.front()) +
                            "; use check_singular_hyperbolic");
  HyperbolicReport rep;
  SplittingOptions so = opts.splitting;
  so.within = &cls;
  rep.certificate = estimate_splitting(field, seeds, opts.T, FlowKind::linear_poincare, so);
  const auto checkpoints = default_checkpoints(rep.certificate);
  const auto idx = checkpoint_indices(rep.certificate, checkpoints);
  rep.certificate.checkpoints = checkpoints;
  if (rep.certificate.samples.empty()) {
    rep.verdict = Verdict::failed;
    return rep;
  }
  const auto t = times_at(rep.certificate, idx);
  rep.contraction = fit_rate(select(rep.certificate, idx, 1.0, 0.0, false), t, opts.fit);
  rep.expansion = fit_rate(select(rep.certificate, idx, 0.0, -1.0, false), t, opts.fit);
  rep.verdict = rep.contraction.pass && rep.expansion.pass ? Verdict::hyperbolic : Verdict::failed;
  rep.certificate.fitted = rep.contraction;
  rep.certificate.verdict = rep.verdict;
  return rep;
}

WssResult check_strong_stable_disjoint(const Field& field, const SingularityRecord& record, const ClassRegion& cls,
                                       double delta, double max_time) {
  if (!(delta != 0.0) || !std::isfinite(delta)) throw PreconditionError("degenerate W^ss offset delta = 0");
  if (record.classification != SingularityRecord::Kind::lorenz_like_for_X || record.eigenvectors.empty())
    throw PreconditionError("strong stable check needs a Lorenz-like singularity with a real spectrum");
  WssResult res;
  res.r_loc = 3.0 * cls.cover().box_diameter();
  const Vec3& sigma = record.position;
  const Vec3 v1 = record.eigenvectors.front();
  const Field rev = field.reversed();
  FlowOptions fo;
  bool hit = false;
  for (double sign : {1.0, -1.0}) {
    try {
      detail::integrate_path(rev, sigma + sign * delta * v1, max_time, fo, [&](const DenseStep<3>& step) {
        for (double frac : {0.25, 0.5, 0.75, 1.0}) {
          const Vec3 p = step.at(step.t0 + frac * (step.t1 - step.t0));
          const double dist = (p - sigma).norm();
          if (dist > res.r_loc && cls.contains_inflated(p)) {
            hit = true;
            if (res.closest_hit < 0 || dist < res.closest_hit) res.closest_hit = dist;
            return false;
          }
        }
        return true;
      });
    } catch (const RegionEscapeError&) {
      res.escaped = true;
    } catch (const ProximityTruncationError&) {
      res.note += "trace truncated near a singular point; ";
    }
  }
  res.pass = !hit;
  if (res.escaped) res.note += "trace escaped the region";
  return res;
}

SingularHyperbolicReport check_singular_hyperbolic(const Field& field, const ClassRegion& cls,
                                                   const std::vector<Vec3>& seeds, const CheckOptions& opts,
                                                   Orientation orientation, double wss_delta) {
  if (cls.empty()) throw EmptyClassError("class is empty");
  const auto sing = singularities_in(field, cls, opts.singularity_grid);
  if (sing.empty()) throw WrongCheckerError("class contains no singularity; use check_hyperbolic");
  const Field oriented = orientation == Orientation::X ? field : field.reversed();
  const auto wanted = orientation == Orientation::X ? SingularityRecord::Kind::lorenz_like_for_X
                                                    : SingularityRecord::Kind::lorenz_like_for_minus_X;
  SingularHyperbolicReport rep;
  rep.orientation = orientation;
  bool wss_ok = true;
  for (const Vec3& s : sing) {
    SingularityRecord rec = classify_singularity(field, s);
    if (rec.classification != wanted) {
      if (rep.offending.empty())
        rep.offending = "singularity at " + format_point(s) + " is " + to_string(rec.classification);
    } else {
      const WssResult w =
          check_strong_stable_disjoint(oriented, classify_singularity(oriented, s), cls, wss_delta);
      rec.wss_check = w.pass;
      wss_ok = wss_ok && w.pass;
    }
    rep.singularities.push_back(rec);
  }

  SplittingOptions so = opts.splitting;
  so.within = &cls;
  rep.certificate = estimate_splitting(oriented, seeds, opts.T, FlowKind::tangent, so);
  if (!rep.certificate.samples.empty()) {
    const auto checkpoints = default_checkpoints(rep.certificate);
    const auto idx = checkpoint_indices(rep.certificate, checkpoints);
    rep.certificate.checkpoints = checkpoints;
    const auto t = times_at(rep.certificate, idx);
    rep.ess_contraction = fit_rate(select(rep.certificate, idx, 1.0, 0.0, false), t, opts.fit);
    rep.area_expansion = fit_rate(select(rep.certificate, idx, 0.0, -1.0, true), t, opts.fit);
    rep.ess_exponent = -rep.ess_contraction.lambda;
    rep.area_slope = rep.area_expansion.lambda;
  }

  if (!rep.offending.empty())
    rep.verdict = Verdict::structural_failure;
  else if (rep.certificate.samples.empty())
    rep.verdict = Verdict::isolated_singularity;
  else if (rep.ess_contraction.pass && rep.area_expansion.pass && wss_ok)
    rep.verdict = orientation == Orientation::X ? Verdict::singular_hyperbolic_attractor
                                                : Verdict::singular_hyperbolic_repeller;
  else
    rep.verdict = Verdict::failed;
  rep.certificate.verdict = rep.verdict;
  return rep;
}

EquivalenceReport check_equivalence(const Field& field, const ClassRegion& cls, const std::vector<Vec3>& seeds,
                                    const CheckOptions& opts) {
  EquivalenceReport rep;
  if (cls.empty()) {
    rep.tangent.flow_kind = FlowKind::tangent;
    rep.tangent.window = rep.linear_poincare.window = opts.T;
    rep.tangent.verdict = rep.linear_poincare.verdict = Verdict::vacuous;
    rep.agree = true;
    return rep;
  }
  SplittingOptions so = opts.splitting;
  so.within = &cls;
  for (FlowKind kind : {FlowKind::tangent, FlowKind::linear_poincare}) {
    SplittingCertificate cert = estimate_splitting(field, seeds, opts.T, kind, so);
    cert = check_domination(cert, default_checkpoints(cert), opts.fit);
    (kind == FlowKind::tangent ? rep.tangent : rep.linear_poincare) = std::move(cert);
  }
  rep.agree = (rep.tangent.verdict == Verdict::dominated) == (rep.linear_poincare.verdict == Verdict::dominated);
  return rep;
}

std::vector<Vec3> sample_class_seeds(const Field& field, const ClassRegion& cls, const Vec3& selector,
                                     const SeedOptions& opts) {
  std::vector<Vec3> seeds;
  if (cls.empty()) return seeds;
  const double spacing = opts.min_spacing > 0 ? opts.min_spacing : 10.0 * cls.cover().h().maxCoeff();
  Vec3 start = selector;
  if (field.evaluate(start).norm() < kDefaultSpeedFloor)
    start += 1e-3 * cls.cover().box_diameter() * Vec3(1, 1, 1).normalized();
  FlowOptions fo;
  fo.speed_floor = kDefaultSpeedFloor;
  std::optional<Vec3> last;
  try {
    detail::integrate_path(field, start, opts.transient + opts.orbit_time, fo, [&](const DenseStep<3>& step) {
      if (step.t1 < opts.transient) return true;
      const Vec3 p = step.y1;
      if (cls.contains(p) && (!last || (p - *last).norm() >= spacing)) {
        seeds.push_back(p);
        last = p;
      }
      return seeds.size() < opts.max_orbit_seeds;
    });
  } catch (const NumericalError&) {
    // keep what was collected before the orbit failed
  }

  std::mt19937_64 rng(opts.rng_seed);
  std::vector<std::size_t> pool = cls.boxes();
  const std::size_t pick = std::min(opts.random_boxes, pool.size());
  for (std::size_t i = 0; i < pick; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
    const Vec3 c = cls.cover().center(pool[i]);
    if (field.evaluate(c).norm() >= kDefaultSpeedFloor) seeds.push_back(c);
  }
  return seeds;
}

}  // namespace singflow
