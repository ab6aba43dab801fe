#pragma once

// Template bodies for flow.hpp.

namespace singflow::detail {

inline void check_point(const Field& field, const Box3& escape_box, const FlowOptions& opts,
                        const Vec3& p, double t) {
  if (!escape_box.contains(p))
    throw RegionEscapeError("orbit left the integration region at t=" + std::to_string(t), t);
  if (opts.speed_floor > 0.0 && field.evaluate_unchecked(p).norm() < opts.speed_floor)
    throw ProximityTruncationError("orbit speed fell below the floor at t=" + std::to_string(t), t, p);
}

template <class OnStep>
Vec3 integrate_path(const Field& field, const Vec3& x, double t, const FlowOptions& opts,
                    OnStep&& on_step) {
  if (!x.allFinite()) throw EvaluationDomainError("initial point is not finite");
  const Box3 escape_box = field.region().inflated(opts.escape_margin);
  auto rhs = [&field](const State<3>& y) -> State<3> { return field.evaluate_unchecked(y); };
  Dopri5<3, decltype(rhs)> stepper(rhs, opts.tol, opts.max_steps);
  double time = 0.0;
  State<3> y = x;
  try {
    stepper.advance(time, y, t, [&](const DenseStep<3>& s) {
      check_point(field, escape_box, opts, s.y1, s.t1);
      return on_step(s);
    });
  } catch (const StepSizeUnderflow& u) {
    throw ProximityTruncationError("step size underflow at t=" + std::to_string(u.t), u.t, y);
  } catch (const StepBudgetExhausted& u) {
    throw NumericalError("step budget exhausted at t=" + std::to_string(u.t));
  }
  return y;
}

}  // namespace singflow::detail

namespace singflow {

template <class OnStep>
bool TangentIntegrator::advance_to(double t, OnStep&& on_step) {
  try {
    return stepper_.advance(time_, state_, t, [&](const DenseStep<12>& s) {
      detail::check_point(*field_, escape_box_, opts_, s.y1.head<3>(), s.t1);
      return on_step(s);
    });
  } catch (const StepSizeUnderflow& u) {
    throw ProximityTruncationError("step size underflow at t=" + std::to_string(u.t), u.t,
                                   state_.head<3>());
  } catch (const StepBudgetExhausted& u) {
    throw NumericalError("step budget exhausted at t=" + std::to_string(u.t));
  }
}

}  // namespace singflow
