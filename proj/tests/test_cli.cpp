#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cola/report.hpp"

using namespace cola;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("cola_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// Head-on LEO conjunction written as an inline-state config.
std::string inline_config_json() {
    return R"({
  "primary": {
    "epoch": "2025-03-01T12:00:00.000",
    "position_m": [6928137.0, 0.0, 0.0],
    "velocity_mps": [0.0, 4564.83, 6057.27],
    "covariance_rtn_m2": [[6400.0, 0, 0], [0, 90000.0, 0], [0, 0, 3600.0]],
    "hbr_m": 5.0
  },
  "secondary": {
    "epoch": "2025-03-01T12:00:00.000",
    "position_m": [6927137.0, 0.0, 0.0],
    "velocity_mps": [0.0, -4564.83, -6057.27],
    "covariance_rtn_m2": [[160000.0, 0, 0], [0, 2250000.0, 0], [0, 0, 90000.0]],
    "hbr_m": 5.0
  },
  "n_knots": 8,
  "target_pc": 1e-6,
  "control_upper_bound_mmps2": 0.5
})";
}

ScenarioConfig load_inline_config(const TempDir& dir) {
    const std::string path = dir.file("config.json");
    std::ofstream(path) << inline_config_json();
    return load_config(path);
}

} // namespace

TEST_CASE("config loading: strict keys and single state source") {
    TempDir dir;
    const ScenarioConfig cfg = load_inline_config(dir);
    CHECK(cfg.n_knots == 8);
    CHECK(cfg.target_pc == 1e-6);
    CHECK(cfg.control_upper_bound_mmps2 == 0.5);
    CHECK_FALSE(cfg.cdm_path.has_value());
    REQUIRE(cfg.primary_state.has_value());
    CHECK(cfg.primary_state->position.x() == 6928137.0);

    {
        std::ofstream(dir.file("bad.json")) << R"({"target_pc": 1e-6, "frobnicate": 1})";
        CHECK_THROWS_WITH_AS((void)load_config(dir.file("bad.json")),
                             doctest::Contains("unknown key"), Error);
    }
    {
        std::ofstream(dir.file("nosource.json")) << R"({"target_pc": 1e-6})";
        CHECK_THROWS_WITH_AS((void)load_config(dir.file("nosource.json")),
                             doctest::Contains("state source"), Error);
    }
    CHECK_THROWS_WITH_AS((void)load_config(dir.file("missing.json")),
                         doctest::Contains("missing.json"), Error);
}

TEST_CASE("config hash: deterministic, sensitive to content") {
    TempDir dir;
    const ScenarioConfig cfg = load_inline_config(dir);
    const std::string h1 = config_hash(cfg);
    const std::string h2 = config_hash(cfg);
    CHECK(h1 == h2);
    CHECK(h1.size() == 16);
    ScenarioConfig other = cfg;
    other.target_pc = 2e-6;
    CHECK(config_hash(other) != h1);
}

TEST_CASE("build_scenario: geometry of the head-on inline conjunction") {
    TempDir dir;
    const Scenario sc = build_scenario(load_inline_config(dir));

    // Relative velocity is along the (anti)flight direction, so b_y
    // annihilates the along-track axes and b_x is radial.
    CHECK((sc.geometry.frame.b_x - Vec3(1, 0, 0)).norm() < 1e-12);
    CHECK(sc.hard_body_radius == 10.0);
    CHECK(sc.horizon > 5000.0);
    CHECK(sc.horizon < 7000.0);
    CHECK(sc.geometry.threshold > 0.0);

    const ScreenReport report = screen_conjunction(sc);
    CHECK(report.miss_distance_m == doctest::Approx(1000.0));
    CHECK(report.bplane_coords_m.x() == doctest::Approx(1000.0).epsilon(1e-9));
    CHECK(std::abs(report.bplane_coords_m.y()) < 1e-6);
    CHECK(report.initial_pc > 0.0);
    CHECK(report.initial_pc < 1.0);
}

TEST_CASE("build_scenario validation errors") {
    TempDir dir;
    ScenarioConfig cfg = load_inline_config(dir);
    cfg.secondary_state->epoch = cfg.secondary_state->epoch + 10.0;
    CHECK_THROWS_WITH_AS((void)build_scenario(cfg), doctest::Contains("epochs"), Error);

    ScenarioConfig unreachable = load_inline_config(dir);
    unreachable.target_pc = 0.9; // far above the density ceiling
    CHECK_THROWS_WITH_AS((void)build_scenario(unreachable),
                         doctest::Contains("TargetUnreachable"), Error);
}

TEST_CASE("prepare_model closes the loop back to the TCA state") {
    TempDir dir;
    ScenarioConfig cfg = load_inline_config(dir);
    cfg.n_knots = 6;
    const Scenario sc = build_scenario(cfg);
    const LinearModel model = prepare_model(sc);
    REQUIRE(model.reference.n_knots() == 6);
    CHECK((model.reference.knots.back().position - sc.primary_tca.position).norm() < 1.0);
    CHECK(model.a_mats.size() == 5);
    CHECK(model.reference.step_seconds == doctest::Approx(sc.horizon / 5.0));
}

TEST_CASE("contingency spec converts caps to acceleration bounds") {
    TempDir dir;
    const Scenario sc = build_scenario(load_inline_config(dir));
    const LinearModel model = prepare_model(sc);
    const PlannerSpec spec = make_contingency_spec(sc, model, 0.004);
    CHECK(spec.mode == PlannerMode::Contingency);
    CHECK(spec.control_upper_bound ==
          doctest::Approx(0.004 / model.reference.step_seconds));
    CHECK_FALSE(spec.control_lower_bound.has_value());
}

TEST_CASE("report writers produce deterministic artifacts") {
    TempDir dir;
    const Scenario sc = build_scenario(load_inline_config(dir));
    const ScreenReport report = screen_conjunction(sc);
    write_screen_report(sc, report, dir.file("screen.json"));
    write_screen_report(sc, report, dir.file("screen2.json"));

    auto slurp = [](const std::string& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string a = slurp(dir.file("screen.json"));
    CHECK(a == slurp(dir.file("screen2.json")));
    CHECK(a.find("\"initial_pc\"") != std::string::npos);
    CHECK(a.find("\"config_hash\"") != std::string::npos);
    CHECK(a.find("\"miss_distance_m\"") != std::string::npos);
}
