#pragma once

#include "cola/errors.hpp"
#include "cola/state.hpp"

namespace cola {

// Total ECI acceleration (central body + enabled perturbations) at a state.
// Throws SubOrbitalState when |r| drops below the configured Earth radius.
Vec3 accel_model(const StateVector& state, const ForceModelConfig& config);

// Integrates xdot = f(x,t) + u over `duration` seconds with the control held
// constant (zero-order hold). Uses an embedded Dormand-Prince 5(4) pair with
// adaptive step control (atol 1e-9, rtol 1e-12). Negative durations integrate
// backward; the spec'd planning paths only use duration >= 0.
StateVector propagate(const StateVector& state, double duration, const ForceModelConfig& config,
                      const Vec3& control = Vec3::Zero());

// Uncontrolled reference trajectory: n_knots states uniformly spaced over
// [0, horizon] starting from `initial`.
Trajectory discretize_reference(const StateVector& initial, double horizon, int n_knots,
                                const ForceModelConfig& config);

// Central finite-difference Jacobians of the one-step discrete map at every
// knot (steps: 1 m position, 1e-3 m/s velocity, 1e-6 m/s^2 control).
LinearModel linearize(const Trajectory& traj, const ForceModelConfig& config);

} // namespace cola
