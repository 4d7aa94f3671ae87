#include <doctest.h>

#include <cmath>

#include "cola/conjunction.hpp"
#include "support/rng.hpp"

using namespace cola;

TEST_CASE("bplane: axis-aligned construction") {
    const BPlaneFrame f = bplane(Vec3(1, 0, 0), Vec3(0, 1, 0));
    CHECK((f.b_y - Vec3(0, 1, 0)).norm() < 1e-15);
    CHECK((f.b_z - Vec3(0, 0, 1)).norm() < 1e-15);
    CHECK((f.b_x - Vec3(1, 0, 0)).norm() < 1e-15);
    const Vec2 proj = f.projector * Vec3(1, 0, 0);
    CHECK(proj.x() == doctest::Approx(1.0));
    CHECK(proj.y() == doctest::Approx(0.0));
}

TEST_CASE("bplane: projector annihilates the relative velocity") {
    testing::Rng rng(41);
    for (int i = 0; i < 30; ++i) {
        const Vec3 dr = rng.normal_vector(3) * 1e3;
        const Vec3 dv = rng.normal_vector(3) * 1e4;
        if (dr.cross(dv).norm() < 1e-3 * dr.norm() * dv.norm()) continue;
        const BPlaneFrame f = bplane(dr, dv);
        CHECK((f.projector * dv).norm() < 1e-12 * dv.norm());

        // Vector-algebra oracle for the basis.
        CHECK(f.b_x.dot(f.b_y) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(f.b_y.dot(f.b_z) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(f.b_x.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((f.b_x.cross(f.b_y) - f.b_z).norm() < 1e-12);
        CHECK((f.b_y - dv.normalized()).norm() < 1e-12);
        CHECK((f.b_z - dr.cross(dv).normalized()).norm() < 1e-12);
    }
    CHECK_THROWS_WITH_AS((void)bplane(Vec3(1, 0, 0), Vec3(2, 0, 0)),
                         doctest::Contains("DegenerateEncounter"), Error);
}

TEST_CASE("combined_covariance: identities and direct-product oracle") {
    const BPlaneFrame f = bplane(Vec3(1, 0, 0), Vec3(0, 1, 0));
    const Mat2 iso = combined_covariance(0.5 * Mat3::Identity(), 0.5 * Mat3::Identity(), f);
    CHECK((iso - Mat2::Identity()).norm() < 1e-14);

    testing::Rng rng(43);
    for (int i = 0; i < 15; ++i) {
        const Vec3 dr = rng.normal_vector(3) * 1e3;
        const Vec3 dv = rng.normal_vector(3) * 1e4;
        if (dr.cross(dv).norm() < 1e-3 * dr.norm() * dv.norm()) continue;
        const BPlaneFrame frame = bplane(dr, dv);
        const Mat3 c1 = rng.spd(3, 0.5);
        const Mat3 c2 = rng.spd(3, 0.5);

        const Mat2 combined = combined_covariance(c1, c2, frame);
        CHECK((combined_covariance(c1, Mat3::Zero(), frame) -
               frame.projector * c1 * frame.projector.transpose())
                  .norm() < 1e-12 * c1.norm());

        // Explicit 2x3 * 3x3 * 3x2 product computed by loops.
        const Mat3 sum = c1 + c2;
        Mat2 oracle = Mat2::Zero();
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) {
                for (int a = 0; a < 3; ++a) {
                    for (int b = 0; b < 3; ++b) {
                        oracle(r, c) += frame.projector(r, a) * sum(a, b) * frame.projector(c, b);
                    }
                }
            }
        }
        CHECK((combined - oracle).norm() < 1e-12 * oracle.norm());
        CHECK((combined - combined.transpose()).norm() < 1e-14 * combined.norm());
    }
}

TEST_CASE("poc_threshold: ceiling, default radius, log algebra") {
    Mat2 c;
    c << 166400.0, 0.0, 0.0, 93600.0;
    const double r_hbr = 10.0;
    const double ceiling = poc_ceiling(r_hbr, c);
    CHECK(poc_threshold(ceiling, r_hbr, c) == doctest::Approx(0.0).epsilon(1e-12));

    const ConjunctionGeometry defaults;
    CHECK(defaults.hard_body_radius == 10.0);

    const double p1 = poc_threshold(1e-6, r_hbr, c);
    const double p2 = poc_threshold(2e-6, r_hbr, c);
    CHECK(p1 - p2 == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

    CHECK_THROWS_WITH_AS((void)poc_threshold(ceiling * 2.0, r_hbr, c),
                         doctest::Contains("TargetUnreachable"), Error);
}

TEST_CASE("poc_estimate: threshold round-trip and monotonicity") {
    testing::Rng rng(47);
    for (int i = 0; i < 10; ++i) {
        const Mat2 c = 1e5 * Mat2(rng.spd(2, 0.3));
        const double r_hbr = 10.0;
        const double target = poc_ceiling(r_hbr, c) * rng.uniform(1e-4, 0.5);
        const double p = poc_threshold(target, r_hbr, c);

        // Any boundary point of the p-ellipse must evaluate back to target.
        Eigen::SelfAdjointEigenSolver<Mat2> eig(c);
        const Mat2 half = eig.operatorSqrt();
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        const Vec2 boundary = std::sqrt(p) * (half * Vec2(std::cos(theta), std::sin(theta)));
        const PocEstimate est = poc_estimate(boundary, c, r_hbr);
        CHECK(est.mahalanobis_sq == doctest::Approx(p).epsilon(1e-12));
        CHECK(est.pc_closed_form == doctest::Approx(target).epsilon(1e-12));

        // Scaling outward strictly decreases the closed form.
        double prev = est.pc_closed_form;
        for (double scale : {1.1, 1.5, 2.0, 4.0}) {
            const double pc = poc_estimate(scale * boundary, c, r_hbr).pc_closed_form;
            CHECK(pc < prev);
            prev = pc;
        }
    }
}

TEST_CASE("poc_estimate: quadrature agrees for a small disk") {
    Mat2 c;
    c << 4.0e4, 1.0e4, 1.0e4, 2.5e4;
    Eigen::SelfAdjointEigenSolver<Mat2> eig(c);
    const double r_hbr = 0.05 * std::sqrt(eig.eigenvalues().minCoeff());
    testing::Rng rng(53);
    for (int i = 0; i < 5; ++i) {
        const Vec2 dr(rng.uniform(-400.0, 400.0), rng.uniform(-400.0, 400.0));
        const PocEstimate est = poc_estimate(dr, c, r_hbr, true);
        REQUIRE(est.pc_quadrature.has_value());
        CHECK(std::abs(est.pc_closed_form - *est.pc_quadrature) <=
              0.02 * std::abs(*est.pc_quadrature));
    }
}

TEST_CASE("poc errors on singular covariance") {
    Mat2 singular;
    singular << 1.0, 1.0, 1.0, 1.0;
    CHECK_THROWS_WITH_AS((void)poc_estimate(Vec2(1, 1), singular, 10.0),
                         doctest::Contains("SingularProjectedCovariance"), Error);
}
