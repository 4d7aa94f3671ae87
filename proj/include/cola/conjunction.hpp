#pragma once

#include <optional>

#include "cola/errors.hpp"
#include "cola/state.hpp"

namespace cola {

// Encounter-plane basis at TCA. b_y points along the relative velocity; the
// projector keeps the (b_x, b_z) components, so projector * delta_v == 0 by
// construction.
struct BPlaneFrame {
    Vec3 b_x, b_y, b_z;
    Mat23 projector; // rows b_x^T, b_z^T
};

struct ConjunctionGeometry {
    BPlaneFrame frame;
    Mat2 combined_cov = Mat2::Identity(); // m^2, projected C
    double threshold = 0.0;               // p, dimensionless
    double hard_body_radius = 10.0;       // m
    StateVector secondary_state;          // at TCA
    double target_pc = 1e-6;
};

struct PocEstimate {
    double mahalanobis_sq = 0.0;
    double pc_closed_form = 0.0;
    std::optional<double> pc_quadrature;
};

// Encounter basis from the relative position/velocity at TCA.
BPlaneFrame bplane(const Vec3& delta_r, const Vec3& delta_v);

// Projected combined position covariance: projector * (C1 + C2) * projector^T.
Mat2 combined_covariance(const Mat3& c1_eci, const Mat3& c2_eci, const BPlaneFrame& frame);

// Mahalanobis threshold p = ln(R^4 / (4 Pc^2 det C)) for the target Pc.
double poc_threshold(double target_pc, double r_hbr, const Mat2& c);

// Closed-form constant-density PoC at a projected relative position, with an
// optional adaptive-quadrature evaluation of the exact disk integral.
PocEstimate poc_estimate(const Vec2& delta_r_b, const Mat2& c, double r_hbr,
                         bool with_quadrature = false);

// Density ceiling R^2 / (2 sqrt(det C)): the largest closed-form Pc any
// relative position can produce for this covariance.
double poc_ceiling(double r_hbr, const Mat2& c);

} // namespace cola
