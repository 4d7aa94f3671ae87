#include <doctest.h>

#include <cmath>

#include "cola/dynamics.hpp"
#include "support/rng.hpp"

using namespace cola;

namespace {

ForceModelConfig two_body_only() {
    ForceModelConfig fm;
    fm.j2_enabled = false;
    fm.drag_enabled = false;
    return fm;
}

StateVector circular_state(double radius, const ForceModelConfig& fm) {
    StateVector s;
    s.position = Vec3(radius, 0.0, 0.0);
    s.velocity = Vec3(0.0, std::sqrt(fm.mu / radius), 0.0);
    return s;
}

double period(double sma, double mu) { return 2.0 * M_PI * std::sqrt(sma * sma * sma / mu); }

} // namespace

TEST_CASE("point-mass acceleration: inverse square, antiparallel") {
    const ForceModelConfig fm = two_body_only();
    StateVector s;
    s.position = Vec3(7.0e6, 0.0, 0.0);
    const Vec3 a = accel_model(s, fm);
    CHECK(a.x() == doctest::Approx(-fm.mu / (7.0e6 * 7.0e6)).epsilon(1e-14));
    CHECK(a.y() == 0.0);
    CHECK(a.z() == 0.0);
    CHECK(a.norm() == doctest::Approx(fm.mu / (7.0e6 * 7.0e6)).epsilon(1e-14));

    testing::Rng rng(2);
    for (int i = 0; i < 20; ++i) {
        StateVector r;
        r.position = rng.normal_vector(3).normalized() * rng.uniform(6.6e6, 4.2e7);
        r.velocity = rng.normal_vector(3) * 1e3;
        const Vec3 acc = accel_model(r, fm);
        CHECK(acc.cross(r.position).norm() < 1e-12 * acc.norm() * r.position.norm());
        CHECK(acc.dot(r.position) < 0.0);
    }
}

TEST_CASE("J2 acceleration matches an independent scalar evaluation") {
    ForceModelConfig fm;
    fm.j2_enabled = true;
    fm.drag_enabled = false;

    // Oracle: textbook J2 acceleration evaluated directly.
    auto j2_oracle = [&](const Vec3& r) {
        const double rn = r.norm();
        const double k = -1.5 * fm.j2_coefficient * fm.mu * fm.earth_radius * fm.earth_radius /
                         std::pow(rn, 5);
        const double z2r2 = (r.z() * r.z()) / (rn * rn);
        return Vec3(k * r.x() * (1.0 - 5.0 * z2r2), k * r.y() * (1.0 - 5.0 * z2r2),
                    k * r.z() * (3.0 - 5.0 * z2r2));
    };

    const double radius = 7.0e6;
    for (const Vec3& r : {Vec3(radius, 0, 0), Vec3(0, 0, radius),
                          Vec3(radius / std::sqrt(2.0), 0, radius / std::sqrt(2.0))}) {
        StateVector s;
        s.position = r;
        const Vec3 total = accel_model(s, fm);
        const Vec3 central = -fm.mu / std::pow(r.norm(), 3) * r;
        const Vec3 j2 = total - central;
        const Vec3 expected = j2_oracle(r);
        CHECK((j2 - expected).norm() < 1e-12 * expected.norm() + 1e-18);
    }
}

TEST_CASE("suborbital states are rejected") {
    const ForceModelConfig fm = two_body_only();
    StateVector s;
    s.position = Vec3(6.0e6, 0.0, 0.0);
    CHECK_THROWS_WITH_AS((void)accel_model(s, fm), doctest::Contains("SubOrbitalState"), Error);
}

TEST_CASE("propagate: identity at zero duration, period closure, semigroup") {
    const ForceModelConfig fm = two_body_only();
    const StateVector s0 = circular_state(6.778137e6, fm);

    const StateVector same = propagate(s0, 0.0, fm);
    CHECK(same.position == s0.position);
    CHECK(same.velocity == s0.velocity);

    const double t_orbit = period(6.778137e6, fm.mu);
    const StateVector after = propagate(s0, t_orbit, fm);
    CHECK((after.position - s0.position).norm() < 1e-6 * s0.position.norm());
    CHECK(after.epoch.seconds_since_reference == doctest::Approx(t_orbit).epsilon(1e-15));

    const StateVector half = propagate(s0, 1234.5, fm);
    const StateVector split = propagate(half, 1000.25, fm);
    const StateVector direct = propagate(s0, 2234.75, fm);
    CHECK((split.position - direct.position).norm() < 1e-5);
    CHECK((split.velocity - direct.velocity).norm() < 1e-8);
}

TEST_CASE("propagate is deterministic and invertible in time") {
    ForceModelConfig fm;
    fm.j2_enabled = true;
    const StateVector s0 = circular_state(6.9e6, fm);
    const StateVector a = propagate(s0, 700.0, fm, Vec3(1e-6, 0, 0));
    const StateVector b = propagate(s0, 700.0, fm, Vec3(1e-6, 0, 0));
    CHECK(a.position == b.position);
    CHECK(a.velocity == b.velocity);

    const StateVector back = propagate(a, -700.0, fm, Vec3(1e-6, 0, 0));
    CHECK((back.position - s0.position).norm() < 1e-5);
}

TEST_CASE("two-body energy and angular momentum conserved over one orbit") {
    const ForceModelConfig fm = two_body_only();
    const double sma = 6.928137e6;
    StateVector s = circular_state(sma, fm);
    // Slightly eccentric so the check is not the circular special case.
    s.velocity *= 1.01;

    auto energy = [&](const StateVector& x) {
        return 0.5 * x.velocity.squaredNorm() - fm.mu / x.position.norm();
    };
    const double e0 = energy(s);
    const Vec3 h0 = s.position.cross(s.velocity);

    const double t_orbit = period(sma, fm.mu);
    StateVector cur = s;
    for (int seg = 0; seg < 8; ++seg) {
        cur = propagate(cur, t_orbit / 8.0, fm);
        CHECK(std::abs(energy(cur) - e0) < 1e-9 * std::abs(e0));
        CHECK((cur.position.cross(cur.velocity) - h0).norm() < 1e-9 * h0.norm());
    }
}

TEST_CASE("discretize_reference: definition cases") {
    const ForceModelConfig fm = two_body_only();
    const StateVector s0 = circular_state(6.778137e6, fm);

    const Trajectory two = discretize_reference(s0, 600.0, 2, fm);
    REQUIRE(two.n_knots() == 2);
    CHECK(two.step_seconds == 300.0);
    const StateVector direct = propagate(s0, 300.0, fm);
    CHECK((two.knots[1].position - direct.position).norm() < 1e-9 * direct.position.norm());

    const double t_orbit = period(6.778137e6, fm.mu);
    const Trajectory fifty = discretize_reference(s0, t_orbit, 50, fm);
    CHECK(fifty.n_knots() == 50);
    CHECK(fifty.step_seconds == t_orbit / 49.0);
    for (int k = 0; k + 1 < 50; ++k) {
        CHECK(fifty.knots[k + 1].epoch - fifty.knots[k].epoch ==
              doctest::Approx(fifty.step_seconds).epsilon(1e-12));
    }

    CHECK_THROWS_AS((void)discretize_reference(s0, 600.0, 1, fm), Error);
}

TEST_CASE("linearize: zero-step limit approaches identity") {
    const ForceModelConfig fm = two_body_only();
    const StateVector s0 = circular_state(6.9e6, fm);
    const Trajectory traj = discretize_reference(s0, 2e-3, 2, fm);
    const LinearModel model = linearize(traj, fm);
    CHECK((model.a_mats[0] - Mat6::Identity()).norm() < 5e-3);
    CHECK(model.b_mats[0].norm() < 5e-3);
}

TEST_CASE("linearize: quadratic prediction-error convergence") {
    ForceModelConfig fm;
    fm.j2_enabled = true;
    const StateVector s0 = circular_state(6.928137e6, fm);
    const Trajectory traj = discretize_reference(s0, 400.0, 3, fm);
    const LinearModel model = linearize(traj, fm);

    const int k = 1;
    Vec6 dx;
    dx << 800.0, -500.0, 300.0, 0.5, -0.3, 0.2;
    const Vec3 u(2e-5, -1e-5, 3e-5);

    auto prediction_error = [&](double scale) {
        const Vec6 dxs = scale * dx;
        const Vec3 us = scale * u;
        const StateVector perturbed =
            StateVector::from_vector(traj.knots[k].epoch, traj.knots[k].as_vector() + dxs);
        const Vec6 truth = propagate(perturbed, traj.step_seconds, fm, us).as_vector();
        const Vec6 predicted =
            traj.knots[k + 1].as_vector() + model.a_mats[k] * dxs + model.b_mats[k] * us;
        return (truth - predicted).norm();
    };

    const double e1 = prediction_error(1.0);
    const double e2 = prediction_error(0.5);
    const double e4 = prediction_error(0.25);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.25));
    CHECK(e2 / e4 == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("linearize agrees with a second finite-difference oracle") {
    ForceModelConfig fm;
    fm.j2_enabled = true;
    const StateVector s0 = circular_state(6.928137e6, fm);
    const Trajectory traj = discretize_reference(s0, 300.0, 2, fm);
    const LinearModel model = linearize(traj, fm);

    // Independent differencing at a 5x larger step.
    Vec6 steps;
    steps << 5.0, 5.0, 5.0, 5e-3, 5e-3, 5e-3;
    Mat6 a_oracle;
    const Vec6 x0 = traj.knots[0].as_vector();
    for (int j = 0; j < 6; ++j) {
        Vec6 xp = x0, xm = x0;
        xp[j] += steps[j];
        xm[j] -= steps[j];
        const Vec6 fp =
            propagate(StateVector::from_vector(traj.knots[0].epoch, xp), traj.step_seconds, fm)
                .as_vector();
        const Vec6 fb =
            propagate(StateVector::from_vector(traj.knots[0].epoch, xm), traj.step_seconds, fm)
                .as_vector();
        a_oracle.col(j) = (fp - fb) / (2.0 * steps[j]);
    }
    // Both stencils are second order; they agree up to the Richardson-style
    // truncation gap plus integrator noise.
    const Mat6 diff = model.a_mats[0] - a_oracle;
    CHECK(diff.norm() < 1e-6 * a_oracle.norm() + 1e-8);
}
