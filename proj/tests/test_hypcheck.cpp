#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "singflow/hypcheck.hpp"

using namespace singflow;
using Kind = SingularityRecord::Kind;

namespace {

Field diag_field(double a, double b, double c) { return Field::linear(Vec3(a, b, c).asDiagonal()); }

// diag(-2,-1,1) on a region holding orbits of length 30 from z = 2e-8.
Field wide_diag() {
  Field f = diag_field(-2, -1, 1);
  f.set_region({Vec3::Constant(-1e6), Vec3::Constant(1e6)});
  return f;
}

ClassRegion box_class(const Field& f, double h, const Vec3& p) {
  const BoxCover cover = build_box_cover(f.region(), h);
  return ClassRegion(cover, {*cover.locate(p)});
}

}  // namespace

TEST_CASE("classification: Lorenz origin and wing equilibria") {
  const Field lz = Field::lorenz();
  const SingularityRecord o = classify_singularity(lz, Vec3::Zero());
  CHECK(o.classification == Kind::lorenz_like_for_X);
  REQUIRE(o.eigenvalues.size() == 3);
  CHECK(std::abs(o.eigenvalues[0].real() - (-11 - std::sqrt(1201.0)) / 2) < 1e-9);
  CHECK(std::abs(o.eigenvalues[1].real() + 8.0 / 3.0) < 1e-9);
  CHECK(std::abs(o.eigenvalues[2].real() - (-11 + std::sqrt(1201.0)) / 2) < 1e-9);
  for (const auto& l : o.eigenvalues) CHECK(l.imag() == 0.0);
  CHECK(o.eigenvectors.size() == 3);
  CHECK_FALSE(o.resolution_flag);

  const double r = std::sqrt(72.0);
  for (double s : {1.0, -1.0}) {
    const SingularityRecord w = classify_singularity(lz, Vec3(s * r, s * r, 27));
    CHECK(w.classification == Kind::hyperbolic_other);
    CHECK(w.eigenvalues[0].real() == doctest::Approx(-13.8546).epsilon(1e-5));
    CHECK(w.eigenvalues[1].real() == doctest::Approx(0.0940).epsilon(1e-3));
    CHECK(std::abs(w.eigenvalues[2].imag()) == doctest::Approx(10.1945).epsilon(1e-5));
    CHECK(w.eigenvectors.empty());
  }
  CHECK_THROWS_AS(classify_singularity(lz, Vec3(1, 1, 1)), PreconditionError);
}

TEST_CASE("classification: boundary, non-hyperbolic and resolution cases") {
  CHECK(classify_singularity(diag_field(-2, -1, 1), Vec3::Zero()).classification == Kind::hyperbolic_other);
  CHECK(classify_singularity(diag_field(-3, -1, 2), Vec3::Zero()).classification == Kind::lorenz_like_for_X);
  CHECK(classify_singularity(diag_field(-2, 1, 3), Vec3::Zero()).classification == Kind::lorenz_like_for_minus_X);
  CHECK(classify_singularity(diag_field(-1, 0, 1), Vec3::Zero()).classification == Kind::non_hyperbolic);
  const SingularityRecord edge = classify_singularity(diag_field(-2, -1, 1 + 1e-9), Vec3::Zero());
  CHECK(edge.resolution_flag);
  CHECK(edge.classification != Kind::lorenz_like_for_X);
  Mat3 jordan;
  jordan << -1, 1, 0, 0, -1, 0, 0, 0, 2;
  CHECK(classify_singularity(Field::linear(jordan), Vec3::Zero()).non_diagonalizable);
}

TEST_CASE("classification is scale invariant and negates under time reversal") {
  const Field lz = Field::lorenz();
  for (const Vec3& p : std::array<Vec3, 2>{Vec3::Zero(), Vec3(std::sqrt(72.0), std::sqrt(72.0), 27)}) {
    const Kind k = classify_singularity(lz, p).classification;
    for (double c : {0.1, 3.0, 50.0}) CHECK(classify_singularity(lz.scaled(c), p).classification == k);
  }
  CHECK(classify_singularity(lz.reversed(), Vec3::Zero()).classification == Kind::lorenz_like_for_minus_X);
  CHECK(classify_singularity(diag_field(-2, 1, 3).reversed(), Vec3::Zero()).classification ==
        Kind::lorenz_like_for_X);
}

TEST_CASE("estimate_splitting: diag(-2,-1,1), tangent kind") {
  const auto cert = estimate_splitting(wide_diag(), {Vec3(0, 1e-3, 2e-8)}, 10.0, FlowKind::tangent);
  REQUIRE(cert.samples.size() == 1);
  const SplittingSample& s = cert.samples[0];
  CHECK(std::abs(std::abs(s.e(0)) - 1) < 1e-6);
  CHECK(s.f.rows() == 3);
  CHECK(s.f.cols() == 2);
  CHECK(s.f.row(0).norm() < 1e-3);  // F = span(e_y, e_z)
  REQUIRE(cert.times.size() == 10);
  for (std::size_t j = 0; j < cert.times.size(); ++j) {
    const double t = cert.times[j];
    CHECK(s.log_e[j] == doctest::Approx(-2 * t).epsilon(1e-6));
    CHECK(s.log_f[j] == doctest::Approx(-t).epsilon(1e-4));
    CHECK(std::abs(s.log_area[j]) < 1e-4);
  }
}

TEST_CASE("estimate_splitting: diag(-2,-1,1) on the z axis, linear Poincare kind") {
  const auto cert = estimate_splitting(wide_diag(), {Vec3(0, 0, 2e-8)}, 10.0, FlowKind::linear_poincare);
  REQUIRE(cert.samples.size() == 1);
  const SplittingSample& s = cert.samples[0];
  CHECK(std::abs(std::abs(s.e(0)) - 1) < 1e-9);
  CHECK(std::abs(std::abs(s.f(1)) - 1) < 1e-3);
  CHECK_THROWS_AS(estimate_splitting(diag_field(-2, -1, 1), {Vec3(0, 0, 1e-3)}, 0.0, FlowKind::tangent),
                  PreconditionError);
  CHECK_THROWS_AS(estimate_splitting(diag_field(-2, -1, 1), {Vec3(0, 0, 1e-3)}, 1.5, FlowKind::tangent),
                  PreconditionError);
}

TEST_CASE("estimate_splitting skips seeds at singular points") {
  const auto cert = estimate_splitting(diag_field(-2, -1, 1), {Vec3::Zero()}, 2.0, FlowKind::tangent);
  CHECK(cert.samples.empty());
  CHECK(cert.n_skipped == 1);
}

TEST_CASE("check_domination: linear domination and isometric failure") {
  SplittingOptions so;
  so.dt = 0.5;
  const auto lin = estimate_splitting(wide_diag(), {Vec3(0, 0, 1e-5)}, 4.0, FlowKind::linear_poincare, so);
  const auto d = check_domination(lin, {1, 2, 3, 4});
  REQUIRE(d.fitted.has_value());
  CHECK(d.fitted->lambda == doctest::Approx(1.0).epsilon(0.01));
  CHECK(d.verdict == Verdict::dominated);

  const Field tr = Field::translation(Vec3(1, 0, 0));
  so.dt = 0.05;
  const auto iso = estimate_splitting(tr, {Vec3(0.1, 0.5, 0.5)}, 0.2, FlowKind::linear_poincare, so);
  const auto f = check_domination(iso, {0.05, 0.1, 0.15, 0.2});
  CHECK(std::abs(f.fitted->lambda) < 1e-9);
  CHECK(f.verdict == Verdict::failed);

  CHECK_THROWS_AS(check_domination(lin, {1, 2}), InsufficientDataError);
  CHECK_THROWS_AS(check_domination(lin, {1, 2, 2.7}), PreconditionError);
}

TEST_CASE("fit_rate: exact line, slack recheck and pass fraction") {
  const std::vector<double> t{1, 2, 3, 4};
  std::vector<std::vector<double>> series(100);
  for (auto& s : series)
    for (double ti : t) s.push_back(std::log(2.0) - 0.5 * ti);
  RateFit r = fit_rate(series, t);
  CHECK(r.C == doctest::Approx(2.0));
  CHECK(r.lambda == doctest::Approx(0.5));
  CHECK(r.pass);
  CHECK(r.pass_fraction == 1.0);
  CHECK(r.margin == doctest::Approx(0.45));

  series[0][3] += 5.0;  // one outlier of 100 is tolerated, two are not
  r = fit_rate(series, t);
  CHECK(r.n_failures == 1);
  CHECK(r.pass);
  series[1][3] += 5.0;
  r = fit_rate(series, t);
  CHECK(r.n_failures == 2);
  CHECK_FALSE(r.pass);
  CHECK_THROWS_AS(fit_rate(series, {1, 2}), InsufficientDataError);
}

TEST_CASE("checkpoint subsets: failures on early checkpoints are implied by the full set") {
  const Field lz = Field::lorenz();
  std::vector<Vec3> seeds;
  Vec3 x = flow(lz, Vec3(1, 1, 1), 50.0);
  for (int n = 0; n < 12; ++n) {
    seeds.push_back(x);
    x = flow(lz, x, 2.0);
  }
  const auto cert = estimate_splitting(lz, seeds, 10.0, FlowKind::linear_poincare);
  const auto full = check_domination(cert, default_checkpoints(cert));
  std::vector<std::vector<double>> series;
  for (const auto& s : cert.samples) {
    series.emplace_back();
    for (std::size_t j = 0; j < s.log_e.size(); ++j) series.back().push_back(s.log_e[j] - s.log_f[j]);
  }
  const auto fails = pointwise_failures(series, cert.times, full.fitted->C, full.fitted->lambda, 0.1);
  for (std::size_t i = 0; i < fails.size(); ++i) {
    const bool early = std::any_of(fails[i].begin(), fails[i].begin() + 5, [](char c) { return c != 0; });
    const bool all = std::any_of(fails[i].begin(), fails[i].end(), [](char c) { return c != 0; });
    CHECK((!early || all));
  }
}

TEST_CASE("determinant identity on a non-normal linear field") {
  Mat3 a;
  a << -3, 1, 0, 0, -1, 1, 0, 0, 2;
  Field f = Field::linear(a);
  f.set_region({Vec3::Constant(-1e6), Vec3::Constant(1e6)});
  const Eigen::EigenSolver<Mat3> es(a);
  Vec3 vu = Vec3::Zero();
  for (int i = 0; i < 3; ++i)
    if (es.eigenvalues()[i].real() > 0) vu = es.eigenvectors().col(i).real();
  const Vec3 seed = Vec3(0.5, 0.5, 0) + 1e-12 * vu.normalized();
  const auto cert = estimate_splitting(f, {seed}, 6.0, FlowKind::tangent);
  REQUIRE(cert.samples.size() == 1);
  const auto& s = cert.samples[0];
  for (std::size_t j = 0; j < cert.times.size(); ++j) {
    const double log_det = a.trace() * cert.times[j];
    CHECK(std::abs(s.log_area[j] - (log_det - s.log_e[j])) < 1e-4);
  }
}

TEST_CASE("check_hyperbolic preconditions") {
  const Field sink = Field::linear(-Mat3::Identity());
  const ClassRegion origin = box_class(sink, 0.25, Vec3(0.01, 0.01, 0.01));
  CHECK_THROWS_AS(check_hyperbolic(sink, ClassRegion(origin.cover(), {}), {}), EmptyClassError);
  const BoxCover cover = build_box_cover(sink.region(), 0.25);
  std::vector<std::size_t> around;
  for (int i = 3; i <= 4; ++i)
    for (int j = 3; j <= 4; ++j)
      for (int k = 3; k <= 4; ++k) around.push_back(cover.index(i, j, k));
  std::sort(around.begin(), around.end());
  CHECK_THROWS_AS(check_hyperbolic(sink, ClassRegion(cover, around), {}), WrongCheckerError);
}

TEST_CASE("check_hyperbolic: suspension saddle is hyperbolic") {
  const Field f = Field::suspension_saddle();
  const BoxCover cover = build_box_cover(f.region(), 0.1);
  const TransitionData d = compute_transition_data(f, cover);
  const ClassRegion cls(cover, chain_class_of(d, 0.2, Vec3(1, 0, 0)));
  CHECK_FALSE(cls.contains(Vec3::Zero()));
  const auto seeds = sample_class_seeds(f, cls, Vec3(1, 0, 0));
  const HyperbolicReport rep = check_hyperbolic(f, cls, seeds);
  CHECK(rep.verdict == Verdict::hyperbolic);
  CHECK(rep.contraction.lambda > 0.05);
  CHECK(rep.expansion.lambda > 0.05);
  CHECK(rep.certificate.samples.size() >= 20);
}

TEST_CASE("check_singular_hyperbolic: isolated singularity and structural failure") {
  const Field f = diag_field(-3, -1, 2);
  const ClassRegion origin = box_class(f, 0.4, Vec3::Zero());
  CHECK(origin.contains(Vec3::Zero()));
  const auto rep = check_singular_hyperbolic(f, origin, {origin.cover().center(origin.boxes()[0])});
  CHECK(rep.verdict == Verdict::isolated_singularity);
  REQUIRE(rep.singularities.size() == 1);
  CHECK(rep.singularities[0].classification == Kind::lorenz_like_for_X);

  const Field lz = Field::lorenz(10, 0.5, 8.0 / 3.0);
  const SingularityRecord o = classify_singularity(lz, Vec3::Zero());
  for (const auto& l : o.eigenvalues) CHECK(l.real() < 0);
  const ClassRegion lo = box_class(lz, 4.0, Vec3::Zero());
  const auto sf = check_singular_hyperbolic(lz, lo, {});
  CHECK(sf.verdict == Verdict::structural_failure);
  CHECK(sf.offending.find("hyperbolic_other") != std::string::npos);

  const Field tr = Field::translation(Vec3(1, 0, 0));
  CHECK_THROWS_AS(check_singular_hyperbolic(tr, box_class(tr, 0.5, Vec3(0.2, 0.2, 0.2)), {}), WrongCheckerError);
}

TEST_CASE("strong stable heuristic: sink class and degenerate offset") {
  const Field f = diag_field(-3, -1, 2);
  const ClassRegion origin = box_class(f, 0.4, Vec3::Zero());
  const SingularityRecord rec = classify_singularity(f, Vec3::Zero());
  const WssResult w = check_strong_stable_disjoint(f, rec, origin, 1e-6);
  CHECK(w.pass);
  CHECK(w.escaped);
  CHECK_THROWS_AS(check_strong_stable_disjoint(f, rec, origin, 0.0), PreconditionError);

  // A class box on the x axis beyond r_loc is hit by the strong stable branch.
  const BoxCover cover = build_box_cover(f.region(), 0.1);
  const ClassRegion on_axis(cover, {*cover.locate(Vec3(0.9, 0.01, 0.01))});
  CHECK_FALSE(check_strong_stable_disjoint(f, rec, on_axis, 1e-6).pass);
}

TEST_CASE("check_equivalence on closed-form cocycles and an empty class") {
  const Field f = wide_diag();
  const BoxCover cover = build_box_cover(f.region(), 2e5);
  std::vector<std::size_t> all(cover.box_count());
  for (std::size_t b = 0; b < all.size(); ++b) all[b] = b;
  CheckOptions opts;
  opts.T = 4.0;
  opts.splitting.dt = 0.5;
  const auto rep = check_equivalence(f, ClassRegion(cover, all), {Vec3(0, 0, 1e-5), Vec3(0, 0, -2e-5)}, opts);
  CHECK(rep.tangent.verdict == Verdict::dominated);
  CHECK(rep.linear_poincare.verdict == Verdict::dominated);
  CHECK(rep.agree);

  const auto empty = check_equivalence(f, ClassRegion(cover, {}), {}, opts);
  CHECK(empty.tangent.verdict == Verdict::vacuous);
  CHECK(empty.agree);
}

TEST_CASE("class seeds are deterministic and inside the class") {
  const Field f = Field::double_sink();
  const BoxCover cover = build_box_cover(f.region(), 0.125);
  const TransitionData d = compute_transition_data(f, cover);
  const ClassRegion cls(cover, chain_class_of(d, 0.05, Vec3(1, 0, 0)));
  SeedOptions so;
  so.random_boxes = 5;
  const auto a = sample_class_seeds(f, cls, Vec3(1, 0.3, 0), so);
  const auto b = sample_class_seeds(f, cls, Vec3(1, 0.3, 0), so);
  CHECK(a == b);
  for (const Vec3& p : a) CHECK(cls.contains(p));
  so.rng_seed = 2;
  CHECK(sample_class_seeds(f, cls, Vec3(1, 0.3, 0), so) != a);
}
