#include "cola/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "cola/conic/solver.hpp"

namespace cola {

namespace {

using nlohmann::ordered_json;

Vec2 project_relative(const Scenario& sc, const Vec3& primary_position) {
    return sc.geometry.frame.projector * (primary_position - sc.secondary_tca.position);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "' for writing");
    return out;
}

ordered_json scenario_echo(const Scenario& sc) {
    ordered_json j;
    j["config_hash"] = config_hash(sc.config);
    j["tca"] = format_epoch(sc.primary_tca.epoch);
    j["n_knots"] = sc.config.n_knots;
    j["horizon_s"] = sc.horizon;
    j["hard_body_radius_m"] = sc.hard_body_radius;
    j["target_pc"] = sc.config.target_pc;
    j["threshold_p"] = sc.geometry.threshold;
    j["mode"] = sc.config.mode == PlannerMode::Standard ? "standard" : "contingency";
    j["alpha"] = sc.config.alpha;
    j["control_upper_bound_mmps2"] = sc.config.control_upper_bound_mmps2;
    if (sc.config.control_lower_bound_mmps2) {
        j["control_lower_bound_mmps2"] = *sc.config.control_lower_bound_mmps2;
    }
    return j;
}

ordered_json outcome_json(const PlanOutcome& o) {
    ordered_json j;
    j["solver_status"] = conic::status_name(o.plan.solver_status);
    j["solver_iterations"] = o.plan.solver_iterations;
    j["solver_gap"] = o.plan.solver_gap;
    j["objective_mps2_sq"] = o.plan.objective;
    j["total_delta_v_mps"] = o.total_delta_v_mps;
    j["initial_pc"] = o.initial_pc;
    j["achieved_pc_linear"] = o.plan.achieved.pc_closed_form;
    j["achieved_pc_nonlinear"] = o.achieved_pc_nonlinear;
    j["mahalanobis_sq_linear"] = o.plan.achieved.mahalanobis_sq;
    j["mahalanobis_sq_nonlinear"] = o.mahalanobis_sq_nonlinear;
    j["terminal_gap"] = o.plan.terminal_gap;
    j["tightness"] = {{"min_ratio", o.plan.tightness.min_ratio},
                      {"certified", o.plan.tightness.certified}};
    j["bplane_m"] = {{"unmaneuvered", {o.rb_unmaneuvered.x(), o.rb_unmaneuvered.y()}},
                     {"maneuvered_linear", {o.rb_linear.x(), o.rb_linear.y()}},
                     {"maneuvered_nonlinear", {o.rb_nonlinear.x(), o.rb_nonlinear.y()}}};
    if (o.dv_cap_mps > 0.0) j["dv_cap_mps"] = o.dv_cap_mps;
    ordered_json controls = ordered_json::array();
    for (size_t k = 0; k < o.plan.controls.size(); ++k) {
        const Vec3& u = o.plan.controls[k];
        controls.push_back({{"t_s", static_cast<double>(k) * o.step_seconds},
                            {"ax_mps2", u.x()},
                            {"ay_mps2", u.y()},
                            {"az_mps2", u.z()},
                            {"norm_mps2", u.norm()}});
    }
    j["controls"] = controls;
    return j;
}

} // namespace

ScreenReport screen_conjunction(const Scenario& scenario) {
    ScreenReport report;
    const Vec2 rb = project_relative(scenario, scenario.primary_tca.position);
    const PocEstimate est =
        poc_estimate(rb, scenario.geometry.combined_cov, scenario.hard_body_radius);
    report.initial_pc = est.pc_closed_form;
    report.mahalanobis_sq = est.mahalanobis_sq;
    report.miss_distance_m =
        (scenario.primary_tca.position - scenario.secondary_tca.position).norm();
    report.bplane_coords_m = rb;
    report.pc_ceiling = poc_ceiling(scenario.hard_body_radius, scenario.geometry.combined_cov);
    return report;
}

PlanOutcome run_plan(const Scenario& scenario, const LinearModel& model, const PlannerSpec& spec,
                     const conic::SolverSettings& settings) {
    auto [problem, layout] = build_sdp(spec);
    const conic::ConicSolution sol = conic::solve(problem, settings);
    if (sol.status != conic::SolveStatus::Optimal) {
        throw Error(ErrorCode::SolverFailure,
                    std::string("conic solver returned ") + conic::status_name(sol.status));
    }
    PlanOutcome out;
    out.plan = extract_solution(sol, layout, spec);
    out.step_seconds = model.reference.step_seconds;
    out.rb_unmaneuvered = project_relative(scenario, scenario.primary_tca.position);
    out.initial_pc =
        poc_estimate(out.rb_unmaneuvered, scenario.geometry.combined_cov, scenario.hard_body_radius)
            .pc_closed_form;

    const Vec3 ref_n = model.reference.knots.back().position;
    out.rb_linear = scenario.geometry.frame.projector *
                    (ref_n + out.plan.delta_states.back().head<3>() -
                     scenario.secondary_tca.position);

    double dv = 0.0;
    for (const Vec3& u : out.plan.controls) dv += u.norm() * out.step_seconds;
    out.total_delta_v_mps = dv;

    // Nonlinear validation: re-propagate with the extracted controls.
    StateVector state = model.reference.knots.front();
    state = StateVector::from_vector(state.epoch, state.as_vector() + spec.initial_delta_state);
    for (const Vec3& u : out.plan.controls) {
        state = propagate(state, out.step_seconds, scenario.config.force_model, u);
    }
    out.rb_nonlinear = project_relative(scenario, state.position);
    const PocEstimate nl =
        poc_estimate(out.rb_nonlinear, scenario.geometry.combined_cov, scenario.hard_body_radius);
    out.achieved_pc_nonlinear = nl.pc_closed_form;
    out.mahalanobis_sq_nonlinear = nl.mahalanobis_sq;
    return out;
}

void write_screen_report(const Scenario& scenario, const ScreenReport& report,
                         const std::string& path) {
    ordered_json j;
    j["scenario"] = scenario_echo(scenario);
    j["initial_pc"] = report.initial_pc;
    j["mahalanobis_sq"] = report.mahalanobis_sq;
    j["miss_distance_m"] = report.miss_distance_m;
    j["bplane_m"] = {report.bplane_coords_m.x(), report.bplane_coords_m.y()};
    j["pc_ceiling"] = report.pc_ceiling;
    open_out(path) << j.dump(2) << "\n";
}

void write_plan_report(const Scenario& scenario, const PlanOutcome& outcome,
                       const std::string& path) {
    ordered_json j;
    j["scenario"] = scenario_echo(scenario);
    j.update(outcome_json(outcome));
    open_out(path) << j.dump(2) << "\n";
}

void write_contingency_report(const Scenario& scenario, const std::vector<PlanOutcome>& outcomes,
                              const std::string& path) {
    ordered_json j;
    j["scenario"] = scenario_echo(scenario);
    ordered_json runs = ordered_json::array();
    for (const auto& o : outcomes) runs.push_back(outcome_json(o));
    j["runs"] = runs;
    open_out(path) << j.dump(2) << "\n";
}

void write_baseline_report(const Scenario& scenario, const ScanResult& scan, double sdp_cost,
                           const std::string& path) {
    ordered_json j;
    j["scenario"] = scenario_echo(scenario);
    j["samples"] = scan.samples.size();
    j["best_index"] = scan.best_index;
    j["best_cost"] = scan.best_cost;
    j["sdp_cost"] = sdp_cost;
    j["relative_gap"] = sdp_cost > 0.0 ? (scan.best_cost - sdp_cost) / sdp_cost : 0.0;
    open_out(path) << j.dump(2) << "\n";
}

void write_controls_csv(const PlanOutcome& outcome, const std::string& path) {
    auto out = open_out(path);
    out << "t_s,ax_mmps2,ay_mmps2,az_mmps2,norm_mmps2\n";
    char buf[256];
    for (size_t k = 0; k < outcome.plan.controls.size(); ++k) {
        const Vec3 u = 1e3 * outcome.plan.controls[k]; // m/s^2 -> mm/s^2
        std::snprintf(buf, sizeof(buf), "%.6f,%.9e,%.9e,%.9e,%.9e\n",
                      static_cast<double>(k) * outcome.step_seconds, u.x(), u.y(), u.z(),
                      u.norm());
        out << buf;
    }
}

void write_tightness_csv(const PlanOutcome& outcome, const std::string& path) {
    auto out = open_out(path);
    out << "knot,ratio\n";
    char buf[64];
    const auto& ratios = outcome.plan.tightness.per_block_eigenvalue_ratio;
    for (size_t k = 0; k < ratios.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9e\n", k + 1, ratios[k]);
        out << buf;
    }
}

void write_bplane_csv(const Scenario& scenario, const std::vector<PlanOutcome>& outcomes,
                      const std::string& path) {
    auto out = open_out(path);
    out << "kind,theta_rad,bx_km,bz_km\n";
    char buf[160];
    const std::vector<Vec2> ellipse = ellipse_samples(scenario.geometry, 256);
    for (size_t i = 0; i <= ellipse.size(); ++i) {
        const Vec2& p = ellipse[i % ellipse.size()];
        const double theta = 2.0 * M_PI * static_cast<double>(i) / ellipse.size();
        std::snprintf(buf, sizeof(buf), "ellipse,%.9f,%.9e,%.9e\n", theta, 1e-3 * p.x(),
                      1e-3 * p.y());
        out << buf;
    }
    out << "secondary,0,0,0\n";
    if (!outcomes.empty()) {
        const Vec2& u0 = outcomes.front().rb_unmaneuvered;
        std::snprintf(buf, sizeof(buf), "unmaneuvered,0,%.9e,%.9e\n", 1e-3 * u0.x(), 1e-3 * u0.y());
        out << buf;
        for (const auto& o : outcomes) {
            std::snprintf(buf, sizeof(buf), "maneuvered,0,%.9e,%.9e\n", 1e-3 * o.rb_linear.x(),
                          1e-3 * o.rb_linear.y());
            out << buf;
        }
    }
}

void write_heatmap_csv(const ScanResult& scan, const std::string& path) {
    auto out = open_out(path);
    out << "theta_rad,bx_m,bz_m,cost,feasible\n";
    char buf[160];
    for (const auto& s : scan.samples) {
        std::snprintf(buf, sizeof(buf), "%.9f,%.9e,%.9e,%.9e,%d\n", s.theta,
                      s.boundary_point.x(), s.boundary_point.y(),
                      s.feasible ? s.cost : std::nan(""), s.feasible ? 1 : 0);
        out << buf;
    }
}

} // namespace cola
