#include "cola/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace cola {

namespace {

constexpr double kAbsTol = 1e-9;
constexpr double kRelTol = 1e-12;

Vec6 state_derivative(const Vec6& x, const ForceModelConfig& config, const Vec3& control) {
    StateVector s;
    s.position = x.head<3>();
    s.velocity = x.tail<3>();
    Vec6 dx;
    dx.head<3>() = s.velocity;
    dx.tail<3>() = accel_model(s, config) + control;
    return dx;
}

// Dormand-Prince 5(4) tableau.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
                 B6 = 11.0 / 84;
// Difference between the 5th- and 4th-order weights (error estimate).
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200,
                 E6 = 22.0 / 525, E7 = -1.0 / 40;

} // namespace

Vec3 accel_model(const StateVector& state, const ForceModelConfig& config) {
    const Vec3& r = state.position;
    const double rn = r.norm();
    if (rn < config.earth_radius) {
        throw Error(ErrorCode::SubOrbitalState,
                    "position norm " + std::to_string(rn) + " m below earth radius");
    }
    const double rn2 = rn * rn;
    Vec3 a = -config.mu / (rn2 * rn) * r;

    if (config.j2_enabled) {
        const double re_over_r = config.earth_radius / rn;
        const double k = -1.5 * config.j2_coefficient * config.mu / rn2 * re_over_r * re_over_r;
        const double z2 = (r.z() / rn) * (r.z() / rn);
        Vec3 aj2;
        aj2.x() = k * (r.x() / rn) * (1.0 - 5.0 * z2);
        aj2.y() = k * (r.y() / rn) * (1.0 - 5.0 * z2);
        aj2.z() = k * (r.z() / rn) * (3.0 - 5.0 * z2);
        a += aj2;
    }

    if (config.drag_enabled) {
        const double altitude = rn - config.earth_radius;
        const double rho = config.drag_reference_density *
                           std::exp(-(altitude - config.drag_reference_altitude) /
                                    config.drag_scale_height);
        // Non-rotating atmosphere: drag acts against the inertial velocity.
        const double vn = state.velocity.norm();
        a += -0.5 * rho * config.drag_ballistic_coefficient * vn * state.velocity;
    }
    return a;
}

StateVector propagate(const StateVector& state, double duration, const ForceModelConfig& config,
                      const Vec3& control) {
    if (duration == 0.0) return state;
    const double direction = duration > 0.0 ? 1.0 : -1.0;
    const double t_end = duration;

    Vec6 y = state.as_vector();
    double t = 0.0;
    double h = direction * std::min(std::abs(duration), 10.0);
    const double h_min = std::abs(duration) * 1e-14;

    Vec6 k1 = state_derivative(y, config, control);
    while (direction * (t_end - t) > 0.0) {
        if (direction * (t + h) > direction * t_end) h = t_end - t;

        const Vec6 k2 = state_derivative(y + h * (A21 * k1), config, control);
        const Vec6 k3 = state_derivative(y + h * (A31 * k1 + A32 * k2), config, control);
        const Vec6 k4 = state_derivative(y + h * (A41 * k1 + A42 * k2 + A43 * k3), config, control);
        const Vec6 k5 = state_derivative(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
                                         config, control);
        const Vec6 k6 = state_derivative(
            y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5), config, control);
        const Vec6 y_next = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        const Vec6 k7 = state_derivative(y_next, config, control);

        const Vec6 err_vec =
            h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        double err = 0.0;
        for (int i = 0; i < 6; ++i) {
            const double scale = kAbsTol + kRelTol * std::max(std::abs(y[i]), std::abs(y_next[i]));
            const double e = err_vec[i] / scale;
            err += e * e;
        }
        err = std::sqrt(err / 6.0);

        if (err <= 1.0) {
            t += h;
            y = y_next;
            k1 = k7; // first-same-as-last
        }
        const double factor =
            std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 0.2, 5.0);
        h *= factor;
        if (std::abs(h) < h_min && direction * (t_end - t) > 0.0) {
            throw Error(ErrorCode::IntegrationFailure, "step size underflow");
        }
    }
    return StateVector::from_vector(state.epoch + duration, y);
}

Trajectory discretize_reference(const StateVector& initial, double horizon, int n_knots,
                                const ForceModelConfig& config) {
    if (n_knots < 2) throw Error(ErrorCode::IntegrationFailure, "n_knots must be >= 2");
    if (!(horizon > 0.0)) throw Error(ErrorCode::IntegrationFailure, "horizon must be positive");
    Trajectory traj;
    traj.step_seconds = horizon / (n_knots - 1);
    traj.knots.reserve(n_knots);
    traj.knots.push_back(initial);
    for (int k = 1; k < n_knots; ++k) {
        traj.knots.push_back(propagate(traj.knots.back(), traj.step_seconds, config));
    }
    return traj;
}

LinearModel linearize(const Trajectory& traj, const ForceModelConfig& config) {
    const int n = traj.n_knots();
    if (n < 2) throw Error(ErrorCode::IntegrationFailure, "trajectory needs >= 2 knots");
    const double dt = traj.step_seconds;

    // Per-component central-difference steps.
    Vec6 dx_steps;
    dx_steps << 1.0, 1.0, 1.0, 1e-3, 1e-3, 1e-3;
    const double du_step = 1e-6;

    LinearModel model;
    model.reference = traj;
    model.a_mats.resize(n - 1);
    model.b_mats.resize(n - 1);

    for (int k = 0; k < n - 1; ++k) {
        const StateVector& xk = traj.knots[k];
        auto step_map = [&](const Vec6& x, const Vec3& u) {
            return propagate(StateVector::from_vector(xk.epoch, x), dt, config, u).as_vector();
        };
        const Vec6 x0 = xk.as_vector();
        Mat6& a = model.a_mats[k];
        for (int j = 0; j < 6; ++j) {
            Vec6 xp = x0, xm = x0;
            xp[j] += dx_steps[j];
            xm[j] -= dx_steps[j];
            a.col(j) = (step_map(xp, Vec3::Zero()) - step_map(xm, Vec3::Zero())) /
                       (2.0 * dx_steps[j]);
        }
        Mat63& b = model.b_mats[k];
        for (int j = 0; j < 3; ++j) {
            Vec3 up = Vec3::Zero(), um = Vec3::Zero();
            up[j] += du_step;
            um[j] -= du_step;
            b.col(j) = (step_map(x0, up) - step_map(x0, um)) / (2.0 * du_step);
        }
    }
    return model;
}

} // namespace cola
