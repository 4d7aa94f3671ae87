#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cola/cdm.hpp"
#include "cola/conjunction.hpp"
#include "cola/dynamics.hpp"
#include "cola/relaxation.hpp"

namespace cola {

// Effective run configuration: a single JSON file plus CLI overrides.
struct ScenarioConfig {
    // Exactly one state source: a CDM file, or inline states at TCA.
    std::optional<std::string> cdm_path;
    std::optional<StateVector> primary_state;
    std::optional<StateVector> secondary_state;
    Mat3 primary_cov_rtn = Mat3::Identity();
    Mat3 secondary_cov_rtn = Mat3::Identity();
    double primary_hbr = 5.0;
    double secondary_hbr = 5.0;

    ForceModelConfig force_model;
    int n_knots = 50;
    std::optional<double> horizon_seconds; // default: one revolution of the primary
    double target_pc = 1e-6;
    std::optional<double> hard_body_radius; // m; default: sum of object contributions
    double control_upper_bound_mmps2 = 0.15;
    std::optional<double> control_lower_bound_mmps2;
    PlannerMode mode = PlannerMode::Standard;
    double alpha = 10.0;
    std::vector<double> dv_caps_mps = {0.004, 0.006, 0.008, 0.010};
    int baseline_count = 100;
};

ScenarioConfig load_config(const std::string& path);

// Canonical serialization of the effective config (stable key order); the
// FNV-1a hash of it is embedded in every report.
std::string canonical_config(const ScenarioConfig& config);
std::string config_hash(const ScenarioConfig& config);

// Conjunction inputs resolved from the config (CDM parsed, covariances
// rotated to ECI, encounter geometry frozen at the unmaneuvered TCA).
struct Scenario {
    ScenarioConfig config;
    StateVector primary_tca;
    StateVector secondary_tca;
    Mat3 cov_primary_eci = Mat3::Zero();
    Mat3 cov_secondary_eci = Mat3::Zero();
    double hard_body_radius = 10.0;
    double horizon = 0.0; // s
    ConjunctionGeometry geometry;
};

Scenario build_scenario(const ScenarioConfig& config);

// Reference trajectory ending at TCA (knot N-1) plus its linearization.
LinearModel prepare_model(const Scenario& scenario);

// Planner problem for the scenario; contingency caps override the upper
// bound as cap / step_seconds.
PlannerSpec make_planner_spec(const Scenario& scenario, const LinearModel& model);
PlannerSpec make_contingency_spec(const Scenario& scenario, const LinearModel& model,
                                  double dv_cap_mps);

} // namespace cola
