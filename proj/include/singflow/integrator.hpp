#pragma once

// Adaptive Dormand-Prince 5(4) integrator with cubic Hermite dense output.
//
// Coefficients follow E. Hairer, S.P. Norsett and G. Wanner, Solving
// Ordinary Differential Equations I, 2nd ed., table 5.2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include <Eigen/Dense>

namespace singflow {

template <int N>
using State = Eigen::Matrix<double, N, 1>;

/// One accepted step, enough to evaluate the cubic Hermite interpolant.
template <int N>
struct DenseStep {
  double t0 = 0, t1 = 0;
  State<N> y0, y1, f0, f1;

  State<N> at(double t) const {
    const double h = t1 - t0;
    if (h == 0.0) return y0;
    const double s = (t - t0) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1;
  }
};

/// Thrown when the step size collapses below the resolution of t.
struct StepSizeUnderflow {
  double t;
};

/// Thrown when the step budget is exhausted.
struct StepBudgetExhausted {
  double t;
};

template <int N, class Rhs>
class Dopri5 {
 public:
  Dopri5(Rhs rhs, double tol, std::size_t max_steps = 20'000'000)
      : rhs_(std::move(rhs)), tol_(tol), max_steps_(max_steps) {}

  /// Advances (t, y) to t_end, landing on it exactly. on_step is invoked for
  /// every accepted step; returning false stops early, leaving (t, y) at the
  /// end of that step. Returns true when t_end was reached.
  template <class OnStep>
  bool advance(double& t, State<N>& y, double t_end, OnStep&& on_step) {
    if (t == t_end) return true;
    const double dir = t_end > t ? 1.0 : -1.0;
    State<N> f = rhs_(y);
    if (h_ <= 0.0) h_ = initial_step(y, f, dir, std::abs(t_end - t));
    bool rejected = false;
    while (dir * (t_end - t) > 0) {
      if (steps_++ >= max_steps_) throw StepBudgetExhausted{t};
      double h = std::min(h_, std::abs(t_end - t));
      const bool last = h >= std::abs(t_end - t);
      if (h < 1e-14 * std::max(1.0, std::abs(t))) throw StepSizeUnderflow{t};

      State<N> y_new, f_new;
      double err = try_step(y, f, dir * h, y_new, f_new);
      if (!(err <= 1.0)) {
        double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
        h_ = h * std::min(1.0, fac);
        rejected = true;
        continue;
      }
      double fac = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      fac = std::clamp(fac, 0.2, rejected ? 1.0 : 5.0);
      if (!last || h == h_) h_ = h * fac;
      rejected = false;

      DenseStep<N> step{t, last ? t_end : t + dir * h, y, y_new, f, f_new};
      t = step.t1;
      y = y_new;
      f = f_new;
      if (!on_step(static_cast<const DenseStep<N>&>(step))) return false;
    }
    return true;
  }

  bool advance(double& t, State<N>& y, double t_end) {
    return advance(t, y, t_end, [](const DenseStep<N>&) { return true; });
  }

  std::size_t steps() const { return steps_; }

 private:
  double weight(double a, double b) const { return tol_ + tol_ * std::max(std::abs(a), std::abs(b)); }

  double initial_step(const State<N>& y, const State<N>& f, double dir, double span) {
    double d0 = 0, d1 = 0;
    for (int i = 0; i < N; ++i) {
      const double sk = weight(y[i], y[i]);
      d0 += (y[i] / sk) * (y[i] / sk);
      d1 += (f[i] / sk) * (f[i] / sk);
    }
    d0 = std::sqrt(d0 / N);
    d1 = std::sqrt(d1 / N);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    State<N> f1 = rhs_(State<N>(y + dir * h0 * f));
    double d2 = 0;
    for (int i = 0; i < N; ++i) {
      const double sk = weight(y[i], y[i]);
      d2 += ((f1[i] - f[i]) / sk) * ((f1[i] - f[i]) / sk);
    }
    d2 = std::sqrt(d2 / N) / h0;
    double dm = std::max(d1, d2);
    double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    return std::min({100 * h0, h1, span});
  }

  double try_step(const State<N>& y, const State<N>& k1, double h, State<N>& y_new, State<N>& k7) {
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                     a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const State<N> k2 = rhs_(State<N>(y + h * a21 * k1));
    const State<N> k3 = rhs_(State<N>(y + h * (a31 * k1 + a32 * k2)));
    const State<N> k4 = rhs_(State<N>(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    const State<N> k5 = rhs_(State<N>(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const State<N> k6 =
        rhs_(State<N>(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    k7 = rhs_(y_new);
    const State<N> err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    if (!y_new.allFinite() || !k7.allFinite()) return std::numeric_limits<double>::infinity();
    double err = 0;
    for (int i = 0; i < N; ++i) {
      const double r = err_vec[i] / weight(y[i], y_new[i]);
      err += r * r;
    }
    return std::sqrt(err / N);
  }

  Rhs rhs_;
  double tol_;
  std::size_t max_steps_;
  std::size_t steps_ = 0;
  double h_ = 0.0;
};

}  // namespace singflow
