#include "cola/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cola {

namespace {

using nlohmann::ordered_json;

Vec3 vec3_from(const ordered_json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) {
        throw Error(ErrorCode::InvalidConfig, what + " must be a 3-element array");
    }
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Mat3 mat3_from(const ordered_json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) {
        throw Error(ErrorCode::InvalidConfig, what + " must be a 3x3 array");
    }
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
        if (!j[r].is_array() || j[r].size() != 3) {
            throw Error(ErrorCode::InvalidConfig, what + " must be a 3x3 array");
        }
        for (int c = 0; c < 3; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

StateVector state_from(const ordered_json& j, const std::string& what) {
    StateVector s;
    s.epoch = parse_epoch(j.at("epoch").get<std::string>());
    s.position = vec3_from(j.at("position_m"), what + ".position_m");
    s.velocity = vec3_from(j.at("velocity_mps"), what + ".velocity_mps");
    return s;
}

void check_keys(const ordered_json& j, const std::set<std::string>& allowed,
                const std::string& scope) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw Error(ErrorCode::InvalidConfig, "unknown key '" + it.key() + "' in " + scope);
        }
    }
}

double orbital_period(const StateVector& state, const ForceModelConfig& fm) {
    const double r = state.position.norm();
    const double v2 = state.velocity.squaredNorm();
    const double inv_a = 2.0 / r - v2 / fm.mu;
    if (!(inv_a > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "primary state is not on a closed orbit");
    }
    const double a = 1.0 / inv_a;
    return 2.0 * M_PI * std::sqrt(a * a * a / fm.mu);
}

} // namespace

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open config '" + path + "'");
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("JSON parse failure: ") + e.what());
    }

    check_keys(j,
               {"cdm_path", "primary", "secondary", "force_model", "n_knots", "horizon_seconds",
                "target_pc", "hard_body_radius_m", "control_upper_bound_mmps2",
                "control_lower_bound_mmps2", "mode", "alpha", "dv_caps_mps", "baseline_count"},
               "config");

    ScenarioConfig cfg;
    if (j.contains("cdm_path")) cfg.cdm_path = j["cdm_path"].get<std::string>();
    if (j.contains("primary")) {
        const auto& p = j["primary"];
        check_keys(p, {"epoch", "position_m", "velocity_mps", "covariance_rtn_m2", "hbr_m"},
                   "primary");
        cfg.primary_state = state_from(p, "primary");
        cfg.primary_cov_rtn = mat3_from(p.at("covariance_rtn_m2"), "primary.covariance_rtn_m2");
        if (p.contains("hbr_m")) cfg.primary_hbr = p["hbr_m"].get<double>();
    }
    if (j.contains("secondary")) {
        const auto& p = j["secondary"];
        check_keys(p, {"epoch", "position_m", "velocity_mps", "covariance_rtn_m2", "hbr_m"},
                   "secondary");
        cfg.secondary_state = state_from(p, "secondary");
        cfg.secondary_cov_rtn = mat3_from(p.at("covariance_rtn_m2"), "secondary.covariance_rtn_m2");
        if (p.contains("hbr_m")) cfg.secondary_hbr = p["hbr_m"].get<double>();
    }
    const bool inline_states = cfg.primary_state.has_value() || cfg.secondary_state.has_value();
    if (cfg.cdm_path.has_value() == inline_states) {
        throw Error(ErrorCode::InvalidConfig,
                    "config needs exactly one state source: cdm_path or primary+secondary");
    }
    if (inline_states && (!cfg.primary_state || !cfg.secondary_state)) {
        throw Error(ErrorCode::InvalidConfig, "inline mode needs both primary and secondary");
    }

    if (j.contains("force_model")) {
        const auto& f = j["force_model"];
        check_keys(f,
                   {"mu_m3ps2", "j2_enabled", "j2_coefficient", "earth_radius_m", "drag_enabled",
                    "drag_ballistic_coefficient_m2pkg", "drag_reference_density_kgpm3",
                    "drag_scale_height_m", "drag_reference_altitude_m"},
                   "force_model");
        auto& fm = cfg.force_model;
        if (f.contains("mu_m3ps2")) fm.mu = f["mu_m3ps2"].get<double>();
        if (f.contains("j2_enabled")) fm.j2_enabled = f["j2_enabled"].get<bool>();
        if (f.contains("j2_coefficient")) fm.j2_coefficient = f["j2_coefficient"].get<double>();
        if (f.contains("earth_radius_m")) fm.earth_radius = f["earth_radius_m"].get<double>();
        if (f.contains("drag_enabled")) fm.drag_enabled = f["drag_enabled"].get<bool>();
        if (f.contains("drag_ballistic_coefficient_m2pkg")) {
            fm.drag_ballistic_coefficient = f["drag_ballistic_coefficient_m2pkg"].get<double>();
        }
        if (f.contains("drag_reference_density_kgpm3")) {
            fm.drag_reference_density = f["drag_reference_density_kgpm3"].get<double>();
        }
        if (f.contains("drag_scale_height_m")) {
            fm.drag_scale_height = f["drag_scale_height_m"].get<double>();
        }
        if (f.contains("drag_reference_altitude_m")) {
            fm.drag_reference_altitude = f["drag_reference_altitude_m"].get<double>();
        }
    }

    if (j.contains("n_knots")) cfg.n_knots = j["n_knots"].get<int>();
    if (cfg.n_knots < 2) throw Error(ErrorCode::InvalidConfig, "n_knots must be >= 2");
    if (j.contains("horizon_seconds")) cfg.horizon_seconds = j["horizon_seconds"].get<double>();
    if (j.contains("target_pc")) cfg.target_pc = j["target_pc"].get<double>();
    if (j.contains("hard_body_radius_m")) cfg.hard_body_radius = j["hard_body_radius_m"].get<double>();
    if (j.contains("control_upper_bound_mmps2")) {
        cfg.control_upper_bound_mmps2 = j["control_upper_bound_mmps2"].get<double>();
    }
    if (j.contains("control_lower_bound_mmps2") && !j["control_lower_bound_mmps2"].is_null()) {
        cfg.control_lower_bound_mmps2 = j["control_lower_bound_mmps2"].get<double>();
    }
    if (j.contains("mode")) {
        const std::string mode = j["mode"].get<std::string>();
        if (mode == "standard") cfg.mode = PlannerMode::Standard;
        else if (mode == "contingency") cfg.mode = PlannerMode::Contingency;
        else throw Error(ErrorCode::InvalidConfig, "mode must be 'standard' or 'contingency'");
    }
    if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
    if (j.contains("dv_caps_mps")) {
        cfg.dv_caps_mps.clear();
        for (const auto& v : j["dv_caps_mps"]) cfg.dv_caps_mps.push_back(v.get<double>());
    }
    if (j.contains("baseline_count")) cfg.baseline_count = j["baseline_count"].get<int>();
    return cfg;
}

std::string canonical_config(const ScenarioConfig& cfg) {
    ordered_json j;
    auto emit_state = [](const StateVector& s, const Mat3& cov, double hbr) {
        ordered_json o;
        o["epoch"] = format_epoch(s.epoch);
        o["position_m"] = {s.position.x(), s.position.y(), s.position.z()};
        o["velocity_mps"] = {s.velocity.x(), s.velocity.y(), s.velocity.z()};
        ordered_json rows = ordered_json::array();
        for (int r = 0; r < 3; ++r) rows.push_back({cov(r, 0), cov(r, 1), cov(r, 2)});
        o["covariance_rtn_m2"] = rows;
        o["hbr_m"] = hbr;
        return o;
    };
    if (cfg.cdm_path) j["cdm_path"] = *cfg.cdm_path;
    if (cfg.primary_state) {
        j["primary"] = emit_state(*cfg.primary_state, cfg.primary_cov_rtn, cfg.primary_hbr);
        j["secondary"] = emit_state(*cfg.secondary_state, cfg.secondary_cov_rtn, cfg.secondary_hbr);
    }
    const auto& fm = cfg.force_model;
    j["force_model"] = {{"mu_m3ps2", fm.mu},
                        {"j2_enabled", fm.j2_enabled},
                        {"j2_coefficient", fm.j2_coefficient},
                        {"earth_radius_m", fm.earth_radius},
                        {"drag_enabled", fm.drag_enabled},
                        {"drag_ballistic_coefficient_m2pkg", fm.drag_ballistic_coefficient},
                        {"drag_reference_density_kgpm3", fm.drag_reference_density},
                        {"drag_scale_height_m", fm.drag_scale_height},
                        {"drag_reference_altitude_m", fm.drag_reference_altitude}};
    j["n_knots"] = cfg.n_knots;
    if (cfg.horizon_seconds) j["horizon_seconds"] = *cfg.horizon_seconds;
    else j["horizon_seconds"] = "one_revolution";
    j["target_pc"] = cfg.target_pc;
    if (cfg.hard_body_radius) j["hard_body_radius_m"] = *cfg.hard_body_radius;
    j["control_upper_bound_mmps2"] = cfg.control_upper_bound_mmps2;
    if (cfg.control_lower_bound_mmps2) {
        j["control_lower_bound_mmps2"] = *cfg.control_lower_bound_mmps2;
    }
    j["mode"] = cfg.mode == PlannerMode::Standard ? "standard" : "contingency";
    j["alpha"] = cfg.alpha;
    j["dv_caps_mps"] = cfg.dv_caps_mps;
    j["baseline_count"] = cfg.baseline_count;
    return j.dump();
}

std::string config_hash(const ScenarioConfig& cfg) {
    const std::string canon = canonical_config(cfg);
    // FNV-1a, 64 bit.
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Scenario build_scenario(const ScenarioConfig& config) {
    Scenario sc;
    sc.config = config;

    if (config.cdm_path) {
        std::ifstream in(*config.cdm_path);
        if (!in) throw Error(ErrorCode::IoFailure, "cannot open CDM '" + *config.cdm_path + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        const CdmMessage msg = parse_cdm(buf.str());
        sc.primary_tca = msg.objects[0].state;
        sc.secondary_tca = msg.objects[1].state;
        sc.cov_primary_eci =
            covariance_to_eci(msg.objects[0].position_covariance_rtn, msg.objects[0].state);
        sc.cov_secondary_eci =
            covariance_to_eci(msg.objects[1].position_covariance_rtn, msg.objects[1].state);
        sc.hard_body_radius = msg.objects[0].hard_body_radius_contribution +
                              msg.objects[1].hard_body_radius_contribution;
    } else {
        sc.primary_tca = *config.primary_state;
        sc.secondary_tca = *config.secondary_state;
        if (std::abs(sc.primary_tca.epoch - sc.secondary_tca.epoch) > 1e-9) {
            throw Error(ErrorCode::InvalidConfig, "primary and secondary epochs must match");
        }
        sc.cov_primary_eci = covariance_to_eci(config.primary_cov_rtn, sc.primary_tca);
        sc.cov_secondary_eci = covariance_to_eci(config.secondary_cov_rtn, sc.secondary_tca);
        sc.hard_body_radius = config.primary_hbr + config.secondary_hbr;
    }
    if (config.hard_body_radius) sc.hard_body_radius = *config.hard_body_radius;

    sc.horizon = config.horizon_seconds ? *config.horizon_seconds
                                        : orbital_period(sc.primary_tca, config.force_model);
    if (!(sc.horizon > 0.0)) throw Error(ErrorCode::InvalidConfig, "horizon must be positive");

    const Vec3 dr = sc.primary_tca.position - sc.secondary_tca.position;
    const Vec3 dv = sc.primary_tca.velocity - sc.secondary_tca.velocity;
    sc.geometry.frame = bplane(dr, dv);
    sc.geometry.combined_cov =
        combined_covariance(sc.cov_primary_eci, sc.cov_secondary_eci, sc.geometry.frame);
    sc.geometry.hard_body_radius = sc.hard_body_radius;
    sc.geometry.secondary_state = sc.secondary_tca;
    sc.geometry.target_pc = config.target_pc;
    sc.geometry.threshold =
        poc_threshold(config.target_pc, sc.hard_body_radius, sc.geometry.combined_cov);
    return sc;
}

LinearModel prepare_model(const Scenario& scenario) {
    const StateVector start =
        propagate(scenario.primary_tca, -scenario.horizon, scenario.config.force_model);
    const Trajectory traj = discretize_reference(start, scenario.horizon, scenario.config.n_knots,
                                                 scenario.config.force_model);
    // The reference must return to the CDM state at TCA; a large gap means the
    // force model and the message disagree.
    const double closure =
        (traj.knots.back().position - scenario.primary_tca.position).norm();
    if (closure > 10.0) {
        throw Error(ErrorCode::InvalidConfig,
                    "reference trajectory misses the TCA state by " + std::to_string(closure) +
                        " m");
    }
    return linearize(traj, scenario.config.force_model);
}

PlannerSpec make_planner_spec(const Scenario& scenario, const LinearModel& model) {
    PlannerSpec spec;
    spec.model = model;
    spec.geometry = scenario.geometry;
    spec.control_upper_bound = scenario.config.control_upper_bound_mmps2 * 1e-3;
    if (scenario.config.control_lower_bound_mmps2) {
        spec.control_lower_bound = *scenario.config.control_lower_bound_mmps2 * 1e-3;
    }
    spec.mode = scenario.config.mode;
    spec.penalty_weight = scenario.config.alpha;
    return spec;
}

PlannerSpec make_contingency_spec(const Scenario& scenario, const LinearModel& model,
                                  double dv_cap_mps) {
    PlannerSpec spec = make_planner_spec(scenario, model);
    spec.mode = PlannerMode::Contingency;
    spec.control_lower_bound.reset();
    spec.control_upper_bound = dv_cap_mps / model.reference.step_seconds;
    return spec;
}

} // namespace cola
