#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cola/epoch.hpp"

namespace cola {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat26 = Eigen::Matrix<double, 2, 6>;

// Inertial (ECI) position/velocity at an epoch, SI units.
struct StateVector {
    Epoch epoch;
    Vec3 position = Vec3::Zero();  // m
    Vec3 velocity = Vec3::Zero();  // m/s

    Vec6 as_vector() const {
        Vec6 x;
        x << position, velocity;
        return x;
    }
    static StateVector from_vector(Epoch epoch, const Vec6& x) {
        return {epoch, x.head<3>(), x.tail<3>()};
    }
};

// Force model: point-mass gravity plus optional J2 and exponential-atmosphere
// drag. Deliberately reduced fidelity; the planner downstream only requires a
// differentiable dynamics function.
struct ForceModelConfig {
    double mu = 3.986004418e14;      // m^3/s^2
    bool j2_enabled = true;
    double j2_coefficient = 1.08262668e-3;
    double earth_radius = 6.378137e6;  // m
    bool drag_enabled = false;
    double drag_ballistic_coefficient = 0.01;  // Cd*A/m, m^2/kg
    double drag_reference_density = 3.614e-13; // kg/m^3
    double drag_scale_height = 88667.0;        // m
    double drag_reference_altitude = 700e3;    // m
};

// Reference trajectory sampled at uniformly spaced knots.
struct Trajectory {
    std::vector<StateVector> knots;
    double step_seconds = 0.0;

    int n_knots() const { return static_cast<int>(knots.size()); }
};

// Per-step discrete Jacobian pairs about the reference trajectory:
//   dx_{k+1} = A_k dx_k + B_k u_k
// with dx in (m, m/s) and u a constant acceleration over the step in m/s^2.
struct LinearModel {
    std::vector<Mat6> a_mats;
    std::vector<Mat63> b_mats;
    Trajectory reference;
};

} // namespace cola
