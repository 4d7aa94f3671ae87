#pragma once

#include <string>
#include <vector>

#include "cola/baseline.hpp"
#include "cola/scenario.hpp"

namespace cola {

struct ScreenReport {
    double initial_pc = 0.0;
    double mahalanobis_sq = 0.0;
    double miss_distance_m = 0.0;
    Vec2 bplane_coords_m = Vec2::Zero();
    double pc_ceiling = 0.0;
};

ScreenReport screen_conjunction(const Scenario& scenario);

struct PlanOutcome {
    ManeuverPlan plan;
    double step_seconds = 0.0;
    double initial_pc = 0.0;
    double achieved_pc_nonlinear = 0.0;
    double mahalanobis_sq_nonlinear = 0.0;
    double total_delta_v_mps = 0.0;
    Vec2 rb_unmaneuvered = Vec2::Zero(); // m
    Vec2 rb_linear = Vec2::Zero();       // m
    Vec2 rb_nonlinear = Vec2::Zero();    // m
    double dv_cap_mps = 0.0;             // contingency sweeps only
};

// Solves the SDP for `spec`, extracts the plan, and validates it by
// re-propagating the nonlinear dynamics under the extracted zero-order-hold
// controls. Throws SolverFailure when the conic status is not Optimal.
PlanOutcome run_plan(const Scenario& scenario, const LinearModel& model, const PlannerSpec& spec,
                     const conic::SolverSettings& settings = {});

// Artifact writers. Paths are taken verbatim; directories must exist.
void write_screen_report(const Scenario& scenario, const ScreenReport& report,
                         const std::string& path);
void write_plan_report(const Scenario& scenario, const PlanOutcome& outcome,
                       const std::string& path);
void write_contingency_report(const Scenario& scenario, const std::vector<PlanOutcome>& outcomes,
                              const std::string& path);
void write_baseline_report(const Scenario& scenario, const ScanResult& scan, double sdp_cost,
                           const std::string& path);
void write_controls_csv(const PlanOutcome& outcome, const std::string& path);
void write_tightness_csv(const PlanOutcome& outcome, const std::string& path);
void write_bplane_csv(const Scenario& scenario, const std::vector<PlanOutcome>& outcomes,
                      const std::string& path);
void write_heatmap_csv(const ScanResult& scan, const std::string& path);

} // namespace cola
