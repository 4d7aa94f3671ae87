#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <vector>

#include "cola/conic/dump.hpp"
#include "cola/conic/solver.hpp"
#include "cola/report.hpp"

namespace {

using namespace cola;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;
constexpr int kExitUncertified = 4;

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::SolverFailure:
    case ErrorCode::NotOptimal:
    case ErrorCode::AllSamplesInfeasible:
        return kExitSolver;
    case ErrorCode::LeadingEntryNearZero:
        return kExitUncertified;
    default:
        return kExitInput;
    }
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<double> target_pc;
    std::optional<int> knots;
    std::optional<double> alpha;
    std::vector<double> dv_caps;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "scenario config (JSON)")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--target-pc", args.target_pc, "override target probability of collision");
    cmd->add_option("--knots", args.knots, "override knot count");
    cmd->add_option("--alpha", args.alpha, "override contingency penalty weight");
    cmd->add_option("--dv-cap", args.dv_caps,
                    "per-step delta-v cap(s) in m/s, converted to an acceleration bound as "
                    "cap / step_seconds (repeatable)");
}

ScenarioConfig effective_config(const CommonArgs& args) {
    ScenarioConfig cfg = load_config(args.config_path);
    if (args.target_pc) cfg.target_pc = *args.target_pc;
    if (args.knots) cfg.n_knots = *args.knots;
    if (args.alpha) cfg.alpha = *args.alpha;
    if (!args.dv_caps.empty()) cfg.dv_caps_mps = args.dv_caps;
    return cfg;
}

std::string out_path(const CommonArgs& args, const std::string& name) {
    std::filesystem::create_directories(args.out_dir);
    return (std::filesystem::path(args.out_dir) / name).string();
}

int cmd_screen(const CommonArgs& args) {
    const Scenario sc = build_scenario(effective_config(args));
    const ScreenReport report = screen_conjunction(sc);
    write_screen_report(sc, report, out_path(args, "screen.json"));
    std::printf("initial Pc %.6e  mahalanobis^2 %.6f  miss %.1f m  b-plane (%.1f, %.1f) m\n",
                report.initial_pc, report.mahalanobis_sq, report.miss_distance_m,
                report.bplane_coords_m.x(), report.bplane_coords_m.y());
    return kExitOk;
}

int cmd_plan(const CommonArgs& args) {
    const Scenario sc = build_scenario(effective_config(args));
    const LinearModel model = prepare_model(sc);
    const PlannerSpec spec = make_planner_spec(sc, model);
    const PlanOutcome outcome = run_plan(sc, model, spec);

    write_plan_report(sc, outcome, out_path(args, "report.json"));
    write_controls_csv(outcome, out_path(args, "controls.csv"));
    write_tightness_csv(outcome, out_path(args, "tightness.csv"));
    write_bplane_csv(sc, {outcome}, out_path(args, "bplane.csv"));

    std::printf("objective %.6e (m/s^2)^2  delta-v %.4f m/s  Pc %.3e -> %.3e (nonlinear %.3e)\n",
                outcome.plan.objective, outcome.total_delta_v_mps, outcome.initial_pc,
                outcome.plan.achieved.pc_closed_form, outcome.achieved_pc_nonlinear);
    std::printf("tightness min ratio %.3e  certified %s\n", outcome.plan.tightness.min_ratio,
                outcome.plan.tightness.certified ? "yes" : "no");
    if (!outcome.plan.tightness.certified) {
        std::fprintf(stderr,
                     "relaxation not certified rank-1; consider plan-contingency, which trades "
                     "the hard PoC constraint for a penalty\n");
        return kExitUncertified;
    }
    return kExitOk;
}

int cmd_plan_contingency(const CommonArgs& args) {
    ScenarioConfig cfg = effective_config(args);
    cfg.mode = PlannerMode::Contingency;
    const Scenario sc = build_scenario(cfg);
    const LinearModel model = prepare_model(sc);
    if (cfg.dv_caps_mps.empty()) {
        throw Error(ErrorCode::InvalidConfig, "plan-contingency needs at least one dv cap");
    }

    std::vector<PlanOutcome> outcomes;
    for (double cap : cfg.dv_caps_mps) {
        const PlannerSpec spec = make_contingency_spec(sc, model, cap);
        PlanOutcome outcome = run_plan(sc, model, spec);
        outcome.dv_cap_mps = cap;
        char name[64];
        std::snprintf(name, sizeof(name), "controls_cap%.6f.csv", cap);
        write_controls_csv(outcome, out_path(args, name));
        std::snprintf(name, sizeof(name), "tightness_cap%.6f.csv", cap);
        write_tightness_csv(outcome, out_path(args, name));
        std::printf("cap %.4f m/s: mahalanobis^2 %.4f (target p %.4f)  Pc %.3e  certified %s\n",
                    cap, outcome.plan.achieved.mahalanobis_sq, sc.geometry.threshold,
                    outcome.plan.achieved.pc_closed_form,
                    outcome.plan.tightness.certified ? "yes" : "no");
        outcomes.push_back(std::move(outcome));
    }
    write_contingency_report(sc, outcomes, out_path(args, "contingency.json"));
    write_bplane_csv(sc, outcomes, out_path(args, "bplane.csv"));
    for (const auto& o : outcomes) {
        if (!o.plan.tightness.certified) {
            std::fprintf(stderr, "cap %.4f m/s produced an uncertified relaxation\n",
                         o.dv_cap_mps);
            return kExitUncertified;
        }
    }
    return kExitOk;
}

int cmd_baseline(const CommonArgs& args, int count_override) {
    ScenarioConfig cfg = effective_config(args);
    cfg.mode = PlannerMode::Standard;
    cfg.control_lower_bound_mmps2.reset();
    const Scenario sc = build_scenario(cfg);
    const LinearModel model = prepare_model(sc);
    const PlannerSpec spec = make_planner_spec(sc, model);
    const int count = count_override > 0 ? count_override : cfg.baseline_count;

    const PlanOutcome sdp = run_plan(sc, model, spec);
    const double sdp_cost_scaled =
        sdp.plan.objective / (spec.scaling.control_scale * spec.scaling.control_scale);
    const ScanResult scan = halfplane_scan(spec, count);

    write_heatmap_csv(scan, out_path(args, "heatmap.csv"));
    write_baseline_report(sc, scan, sdp_cost_scaled, out_path(args, "baseline.json"));
    std::printf("half-plane best cost %.9e  sdp cost %.9e  (both in (mm/s^2)^2, %d samples)\n",
                scan.best_cost, sdp_cost_scaled, count);
    return kExitOk;
}

int cmd_dump_problem(const CommonArgs& args) {
    const Scenario sc = build_scenario(effective_config(args));
    const LinearModel model = prepare_model(sc);
    const PlannerSpec spec = make_planner_spec(sc, model);
    auto [problem, layout] = build_sdp(spec);
    const std::string path = out_path(args, "problem.txt");
    conic::write_problem_file(problem, path);
    std::printf("wrote %s (%d vars, %d rows, %zu cones)\n", path.c_str(), problem.num_vars(),
                problem.num_rows(), problem.cone_spec.size());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Globally optimal low-thrust collision-avoidance maneuver planning"};
    app.require_subcommand(1);

    CommonArgs screen_args, plan_args, contingency_args, baseline_args, dump_args;
    int baseline_count = 0;

    add_common(app.add_subcommand("screen", "report the conjunction's initial PoC"), screen_args);
    add_common(app.add_subcommand("plan", "plan a maneuver via the moment SDP"), plan_args);
    add_common(app.add_subcommand("plan-contingency",
                                  "penalty-mode sweep over per-step delta-v caps"),
               contingency_args);
    auto* baseline_cmd =
        app.add_subcommand("baseline", "half-plane sampling comparison to the SDP");
    add_common(baseline_cmd, baseline_args);
    baseline_cmd->add_option("--count", baseline_count, "number of ellipse samples");
    add_common(app.add_subcommand("dump-problem", "write the assembled conic problem as text"),
               dump_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("screen")) return cmd_screen(screen_args);
        if (app.got_subcommand("plan")) return cmd_plan(plan_args);
        if (app.got_subcommand("plan-contingency")) return cmd_plan_contingency(contingency_args);
        if (app.got_subcommand("baseline")) return cmd_baseline(baseline_args, baseline_count);
        if (app.got_subcommand("dump-problem")) return cmd_dump_problem(dump_args);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInput;
    }
    return kExitOk;
}
