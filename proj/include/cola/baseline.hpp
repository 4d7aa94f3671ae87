#pragma once

#include <vector>

#include "cola/relaxation.hpp"

namespace cola {

struct HalfPlaneSample {
    double theta = 0.0;
    Vec2 boundary_point = Vec2::Zero(); // on the p-ellipse, m
    Vec2 outward_normal = Vec2::Zero(); // normalized C^{-1} * boundary_point
    double cost = 0.0;                  // scaled (mm/s^2)^2 objective, comparable to the SDP
    bool feasible = false;
};

struct ScanResult {
    std::vector<HalfPlaneSample> samples;
    int best_index = -1;
    std::vector<Vec3> best_controls; // m/s^2
    double best_cost = 0.0;
};

// Points r(theta_i) = sqrt(p) * C^{1/2} (cos theta_i, sin theta_i) on the
// Mahalanobis-p ellipse, uniformly spaced angles starting at zero.
std::vector<Vec2> ellipse_samples(const ConjunctionGeometry& geometry, int count);

// Convex subproblem with the ellipse constraint replaced by the tangent
// half-plane at `boundary_point`. Requires Standard mode without a control
// lower bound. Infeasible subproblems are flagged, not fatal.
HalfPlaneSample halfplane_plan(const PlannerSpec& spec, const Vec2& boundary_point,
                               std::vector<Vec3>* controls = nullptr);

// Full scan over `count` uniformly spaced boundary points.
ScanResult halfplane_scan(const PlannerSpec& spec, int count);

} // namespace cola
