#include <cmath>
#include <random>

#include "doctest.h"
#include "singflow/poincare.hpp"

using namespace singflow;

namespace {

const Field& diag_field() {
  static const Field f = [] {
    Field g = Field::linear(Vec3(-2, -1, 1).asDiagonal());
    g.set_region({Vec3::Constant(-10), Vec3::Constant(10)});
    return g;
  }();
  return f;
}

Vec3 on_attractor(double t) { return flow(Field::lorenz(), Vec3(1, 1, 1), 50.0 + t); }

void check_orthonormal(const NormalFrame& fr) {
  CHECK(std::abs(fr.e1.dot(fr.e2)) < 1e-12);
  CHECK(std::abs(fr.e1.norm() - 1) < 1e-12);
  CHECK(std::abs(fr.e2.norm() - 1) < 1e-12);
  CHECK(std::abs(fr.e1.dot(fr.n)) < 1e-12);
  CHECK(std::abs(fr.e2.dot(fr.n)) < 1e-12);
}

}  // namespace

TEST_CASE("frame rule: axis-aligned examples") {
  const NormalFrame z = frame_for_direction(Vec3::Zero(), Vec3(0, 0, 3));
  CHECK((z.e1 - Vec3::UnitX()).norm() < 1e-15);
  CHECK((z.e2 - Vec3::UnitY()).norm() < 1e-15);
  const NormalFrame x = frame_for_direction(Vec3::Zero(), Vec3(1, 0, 0));
  CHECK((x.e1 - Vec3::UnitY()).norm() < 1e-15);
  CHECK((x.e2 - Vec3::UnitZ()).norm() < 1e-15);
  CHECK(x.speed == 1.0);
}

TEST_CASE("frame rule: random directions are orthonormal and deterministic") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  for (int n = 0; n < 200; ++n) {
    const Vec3 v(g(rng), g(rng), g(rng));
    const NormalFrame a = frame_for_direction(Vec3::Zero(), v);
    check_orthonormal(a);
    CHECK(a.e1.cross(a.e2).dot(v) > 0);
    const NormalFrame b = frame_for_direction(Vec3::Zero(), v);
    CHECK(a.e1 == b.e1);
    CHECK(a.e2 == b.e2);
  }
}

TEST_CASE("normal_frame refuses singular points") {
  CHECK_THROWS_AS(normal_frame(Field::lorenz(), Vec3::Zero()), SingularPointError);
  NormalVector v;
  v.frame = normal_frame(diag_field(), Vec3(0, 0, 1));
  CHECK_THROWS_AS(linear_poincare(diag_field(), Vec3(0, 0, 2), 1.0, v), PreconditionError);
}

TEST_CASE("linear Poincare flow: translation is the identity") {
  const Field tr = Field::translation(Vec3(1, 0, 0));
  const Vec3 x = tr.region().center() - Vec3(0.3, 0, 0);
  const PoincareMap m = linear_poincare_map(tr, x, 0.5);
  CHECK((m.matrix - Mat2::Identity()).norm() < 1e-12);
  CHECK(m.speed_ratio == doctest::Approx(1.0));
  CHECK((m.rescaled() - m.matrix).norm() < 1e-12);
}

TEST_CASE("linear Poincare flow: eigen-line orbit of diag(-2,-1,1)") {
  for (double t : {0.0, 0.5, 1.0, 2.0}) {
    const PoincareMap m = linear_poincare_map(diag_field(), Vec3(0, 0, 1), t);
    const Mat2 expect = Vec2(std::exp(-2 * t), std::exp(-t)).asDiagonal();
    CHECK((m.matrix - expect).norm() < 1e-8);
    CHECK(m.speed_ratio == doctest::Approx(std::exp(-t)).epsilon(1e-9));
  }
  NormalVector v;
  v.frame = normal_frame(diag_field(), Vec3(0, 0, 1));
  v.coords = Vec2(1, 1);
  const NormalVector r = rescaled_linear_poincare(diag_field(), Vec3(0, 0, 1), 1.0, v);
  CHECK(r.coords.x() == doctest::Approx(std::exp(-3.0)).epsilon(1e-8));
  CHECK(r.coords.y() == doctest::Approx(std::exp(-2.0)).epsilon(1e-8));
}

TEST_CASE("psi_0 and psi*_0 are the identity") {
  const Vec3 x = on_attractor(1.3);
  const PoincareMap m = linear_poincare_map(Field::lorenz(), x, 0.0);
  CHECK((m.matrix - Mat2::Identity()).norm() < 1e-12);
  CHECK((m.rescaled() - Mat2::Identity()).norm() < 1e-12);
}

TEST_CASE("psi and psi* cocycle laws on Lorenz") {
  const Field lz = Field::lorenz();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.1, 1.5);
  for (int n = 0; n < 15; ++n) {
    const Vec3 x = on_attractor(2.9 * n);
    const double s = u(rng), t = u(rng);
    const PoincareMap whole = linear_poincare_map(lz, x, s + t);
    const PoincareMap first = linear_poincare_map(lz, x, s);
    const PoincareMap second = linear_poincare_map(lz, first.to.base, t);
    const Mat2 composed = second.matrix * first.matrix;
    CHECK((composed - whole.matrix).norm() < 1e-5 * whole.matrix.norm());
    CHECK(std::abs(first.speed_ratio * second.speed_ratio - whole.speed_ratio) < 1e-7 * whole.speed_ratio);
    CHECK((second.rescaled() * first.rescaled() - whole.rescaled()).norm() < 1e-5 * whole.rescaled().norm());
  }
}

TEST_CASE("speed-ratio factors telescope from pointwise speeds") {
  const Field lz = Field::lorenz();
  const Vec3 x = on_attractor(0.7);
  const Vec3 y = flow(lz, x, 0.6);
  const Vec3 z = flow(lz, y, 0.4);
  const double a = lz.evaluate(x).norm() / lz.evaluate(y).norm();
  const double b = lz.evaluate(y).norm() / lz.evaluate(z).norm();
  CHECK(std::abs(a * b - lz.evaluate(x).norm() / lz.evaluate(z).norm()) < 1e-12 * a * b);
}

TEST_CASE("projection consistency: psi equals projected tangent flow") {
  const Field lz = Field::lorenz();
  std::mt19937_64 rng(29);
  std::normal_distribution<double> g;
  for (int n = 0; n < 10; ++n) {
    const Vec3 x = on_attractor(1.9 * n);
    NormalVector v;
    v.frame = normal_frame(lz, x);
    v.coords = Vec2(g(rng), g(rng));
    const NormalVector out = linear_poincare(lz, x, 0.8, v);
    const TangentState ts = tangent_flow(lz, x, 0.8);
    const Vec3 n_end = lz.evaluate(ts.point).normalized();
    Vec3 w = ts.cocycle * v.ambient();
    w -= n_end.dot(w) * n_end;
    CHECK((out.ambient() - w).norm() < 1e-8 * std::max(1.0, w.norm()));
    CHECK(std::abs(out.ambient().dot(n_end)) < 1e-12 * std::max(1.0, w.norm()));
  }
}

TEST_CASE("sectional Poincare flow: translation is the identity") {
  const Field tr = Field::translation(Vec3(1, 0, 0));
  const Vec3 x = tr.region().center() - Vec3(0.2, 0, 0);
  NormalVector v;
  v.frame = normal_frame(tr, x);
  v.coords = Vec2(0.01, -0.02);
  const NormalVector p = sectional_poincare(tr, x, 0.3, v);
  CHECK((p.coords - v.coords).norm() < 1e-12);
  const NormalVector q = rescaled_sectional_poincare(tr, x, 0.3, v);
  CHECK((q.coords - v.coords).norm() < 1e-12);
}

TEST_CASE("sectional Poincare flow preserves zero and t = 0") {
  const Field lz = Field::lorenz();
  for (int n = 0; n < 5; ++n) {
    const Vec3 x = on_attractor(3.1 * n);
    NormalVector zero;
    zero.frame = normal_frame(lz, x);
    CHECK(sectional_poincare(lz, x, 1.0, zero).coords.norm() < 1e-8);
    CHECK(rescaled_sectional_poincare(lz, x, 1.0, zero).coords.norm() < 1e-8);
    NormalVector v = zero;
    v.coords = Vec2(1e-4, 2e-4);
    CHECK((sectional_poincare(lz, x, 0.0, v).coords - v.coords).norm() == 0.0);
  }
}

TEST_CASE("sectional Poincare flow: holonomy radius precondition") {
  const Field lz = Field::lorenz();
  const Vec3 x = on_attractor(0.0);
  NormalVector v;
  v.frame = normal_frame(lz, x);
  v.coords = Vec2(2 * holonomy_radius(lz, x), 0);
  CHECK_THROWS_AS(sectional_poincare(lz, x, 1.0, v), PreconditionError);
}

TEST_CASE("sectional Poincare flow linearizes to psi") {
  const Field lz = Field::lorenz();
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  for (int n = 0; n < 4; ++n) {
    const Vec3 x = on_attractor(1.7 * n + 0.3);
    NormalVector v;
    v.frame = normal_frame(lz, x);
    v.coords = Vec2(g(rng), g(rng)).normalized();
    const NormalVector lin = linear_poincare(lz, x, 1.0, v);
    double prev = -1;
    for (double h : {1e-3, 5e-4, 2.5e-4}) {
      NormalVector hv = v;
      hv.coords *= h;
      const double err = (sectional_poincare(lz, x, 1.0, hv).coords - h * lin.coords).norm() / h;
      if (prev > 0) CHECK(err < 0.6 * prev);
      prev = err;
    }
  }
}
