#include <doctest.h>

#include <sstream>

#include "cola/conic/dump.hpp"
#include "cola/conic/solver.hpp"
#include "support/conic_helpers.hpp"

using namespace cola;
using namespace cola::conic;
using cola::testing::ProblemBuilder;
using Eigen::VectorXd;

namespace {

ConicProblem lp_min_x_above_one() {
    // min x  s.t.  x >= 1   (slack s = x - 1).
    ProblemBuilder b(1);
    b.c[0] = 1.0;
    b.add_row({{0, -1.0}}, -1.0);
    b.add_cone(ConeKind::Nonneg, 1);
    return b.build();
}

ConicProblem soc_norm34() {
    // min t  s.t.  ||(3,4)|| <= t, via fixed components u=3, v=4.
    ProblemBuilder b(3); // t, u, v
    b.c[0] = 1.0;
    b.add_row({{1, 1.0}}, 3.0);
    b.add_row({{2, 1.0}}, 4.0);
    b.add_row({{0, -1.0}}, 0.0);
    b.add_row({{1, -1.0}}, 0.0);
    b.add_row({{2, -1.0}}, 0.0);
    b.add_cone(ConeKind::Zero, 2);
    b.add_cone(ConeKind::SecondOrder, 3);
    return b.build();
}

ConicProblem sdp_forced_2x2() {
    // min tr X  s.t.  X psd, X11 = 1, X12 = 2: optimum X22 = 4, objective 5.
    ProblemBuilder b(3); // svec(X) = (x11, sqrt2*x21, x22)
    b.c[0] = 1.0;
    b.c[2] = 1.0;
    b.add_row({{0, 1.0}}, 1.0);
    b.add_row({{1, 1.0 / linalg::kSqrt2}}, 2.0);
    b.add_row({{0, -1.0}}, 0.0);
    b.add_row({{1, -1.0}}, 0.0);
    b.add_row({{2, -1.0}}, 0.0);
    b.add_cone(ConeKind::Zero, 2);
    b.add_cone(ConeKind::Psd, 2);
    return b.build();
}

} // namespace

TEST_CASE("LP: one-dimensional bound") {
    const ConicSolution sol = solve(lp_min_x_above_one());
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.primal[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(sol.primal_obj == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("SOC: Euclidean norm epigraph") {
    const ConicSolution sol = solve(soc_norm34());
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.primal[0] == doctest::Approx(5.0).epsilon(1e-8));
}

TEST_CASE("SDP: 2x2 determinant boundary") {
    const ConicSolution sol = solve(sdp_forced_2x2());
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.primal_obj == doctest::Approx(5.0).epsilon(1e-7));
    CHECK(sol.primal[2] == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("residuals: exact optimal pair vanishes, perturbation is linear") {
    const ConicProblem p = lp_min_x_above_one();
    ConicSolution sol;
    sol.primal = VectorXd::Constant(1, 1.0);
    sol.dual = VectorXd::Constant(1, 1.0);
    sol.slack = VectorXd::Zero(1);
    const Residuals r0 = residuals(p, sol);
    CHECK(r0.primal_res <= 1e-15);
    CHECK(r0.dual_res <= 1e-15);
    CHECK(r0.gap <= 1e-15);

    ConicSolution shifted = sol;
    shifted.primal[0] += 0.25;
    const Residuals r1 = residuals(p, shifted);
    CHECK(r1.primal_res == doctest::Approx(0.25 / 2.0).epsilon(1e-12)); // ||A d|| / (1+||b||)

    ConicSolution bad = sol;
    bad.primal = VectorXd::Zero(2);
    CHECK_THROWS_AS((void)residuals(p, bad), Error);
}

TEST_CASE("constructed instances solve to the known optimum") {
    testing::Rng rng(1234);
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = testing::constructed_instance(rng, 6, trial % 2 == 0, trial % 3 != 2);
        const ConicSolution sol = solve(inst.problem);
        REQUIRE(sol.status == SolveStatus::Optimal);
        const double denom = 1.0 + std::abs(inst.objective);
        CHECK(std::abs(sol.primal_obj - inst.objective) / denom < 1e-7);
        // Weak duality at the reported solution.
        CHECK(sol.primal_obj >= sol.dual_obj - 1e-8 * (1.0 + std::abs(sol.primal_obj)));
    }
}

TEST_CASE("returned slack is in the cone") {
    testing::Rng rng(77);
    const auto inst = testing::constructed_instance(rng, 5, true, true);
    const ConicSolution sol = solve(inst.problem);
    REQUIRE(sol.status == SolveStatus::Optimal);
    int off = 0;
    for (const auto& blk : inst.problem.cone_spec) {
        const int len = blk.slack_dim();
        const auto seg = sol.slack.segment(off, len);
        switch (blk.kind) {
        case ConeKind::Zero:
            CHECK(seg.lpNorm<Eigen::Infinity>() <= 1e-8);
            break;
        case ConeKind::Nonneg:
            CHECK(seg.minCoeff() >= -1e-8);
            break;
        case ConeKind::SecondOrder:
            CHECK(seg[0] >= seg.tail(len - 1).norm() - 1e-8);
            break;
        case ConeKind::Psd: {
            const Eigen::MatrixXd m = linalg::smat(seg, blk.dim);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
            CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * std::max(1.0, m.trace()));
            break;
        }
        }
        off += len;
    }
}

TEST_CASE("deterministic resolve") {
    testing::Rng rng(99);
    const auto inst = testing::constructed_instance(rng, 5, true, true);
    const ConicSolution a = solve(inst.problem);
    const ConicSolution b = solve(inst.problem);
    REQUIRE(a.status == SolveStatus::Optimal);
    REQUIRE(a.iterations == b.iterations);
    CHECK((a.primal - b.primal).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((a.dual - b.dual).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("objective scaling leaves the solution point unchanged") {
    testing::Rng rng(5);
    const auto inst = testing::constructed_instance(rng, 5, true, false);
    ConicProblem scaled = inst.problem;
    const double gamma = 7.5;
    scaled.objective *= gamma;
    const ConicSolution base = solve(inst.problem);
    const ConicSolution two = solve(scaled);
    REQUIRE(base.status == SolveStatus::Optimal);
    REQUIRE(two.status == SolveStatus::Optimal);
    CHECK((base.primal - two.primal).norm() < 1e-6 * (1.0 + base.primal.norm()));
    CHECK(two.primal_obj == doctest::Approx(gamma * base.primal_obj).epsilon(1e-6));
    CHECK(two.dual_obj == doctest::Approx(gamma * base.dual_obj).epsilon(1e-6));
}

TEST_CASE("primal infeasible LP yields a certificate") {
    // x >= 1 and -x >= 0 cannot hold together.
    ProblemBuilder b(1);
    b.c[0] = 1.0;
    b.add_row({{0, -1.0}}, -1.0);
    b.add_row({{0, 1.0}}, 0.0);
    b.add_cone(ConeKind::Nonneg, 2);
    const ConicSolution sol = solve(b.build());
    REQUIRE(sol.status == SolveStatus::PrimalInfeasible);
    // Farkas certificate: A^T y ~ 0, b^T y = -1, y in the dual cone.
    const ConicProblem p = b.build();
    CHECK(std::abs((p.constraint_matrix.transpose() * sol.dual)[0]) < 1e-6);
    CHECK(p.rhs.dot(sol.dual) == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(sol.dual.minCoeff() >= -1e-9);
}

TEST_CASE("unbounded LP reports dual infeasibility") {
    // min -x s.t. x >= 0.
    ProblemBuilder b(1);
    b.c[0] = -1.0;
    b.add_row({{0, -1.0}}, 0.0);
    b.add_cone(ConeKind::Nonneg, 1);
    const ConicSolution sol = solve(b.build());
    REQUIRE(sol.status == SolveStatus::DualInfeasible);
    // Unbounded ray: c^T x = -1, A x + s = 0.
    CHECK(sol.primal[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("validate rejects malformed problems") {
    ProblemBuilder b(2);
    b.add_row({{0, 1.0}}, 1.0);
    b.add_cone(ConeKind::Nonneg, 2); // cone dims exceed rows
    CHECK_THROWS_AS((void)solve(b.build()), Error);

    ProblemBuilder z(1);
    z.add_row({{0, 0.0}}, 1.0); // all-zero row
    z.add_cone(ConeKind::Nonneg, 1);
    CHECK_THROWS_AS((void)solve(z.build()), Error);
}

TEST_CASE("problem dump round-trips") {
    testing::Rng rng(3);
    const auto inst = testing::constructed_instance(rng, 4, true, true);
    std::stringstream ss;
    write_problem(inst.problem, ss);
    const ConicProblem back = read_problem(ss);
    CHECK(back.num_vars() == inst.problem.num_vars());
    CHECK(back.num_rows() == inst.problem.num_rows());
    REQUIRE(back.cone_spec.size() == inst.problem.cone_spec.size());
    for (size_t i = 0; i < back.cone_spec.size(); ++i) {
        CHECK(back.cone_spec[i].kind == inst.problem.cone_spec[i].kind);
        CHECK(back.cone_spec[i].dim == inst.problem.cone_spec[i].dim);
    }
    CHECK((back.objective - inst.problem.objective).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((back.rhs - inst.problem.rhs).lpNorm<Eigen::Infinity>() == 0.0);
    const Eigen::MatrixXd da = Eigen::MatrixXd(back.constraint_matrix) -
                               Eigen::MatrixXd(inst.problem.constraint_matrix);
    CHECK(da.lpNorm<Eigen::Infinity>() == 0.0);
}
