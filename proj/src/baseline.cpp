#include "cola/baseline.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "cola/conic/solver.hpp"

namespace cola {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct ScaledModel {
    std::vector<Mat6> a;
    std::vector<Mat63> b;
    std::vector<Mat63> psi; // terminal influence of each step's control
    Mat6 t0;                // terminal influence of the initial error state
};

ScaledModel scale_model(const PlannerSpec& spec) {
    const int n_steps = spec.model.reference.n_knots() - 1;
    const Vec6 dstate = spec.scaling.state_scale();
    const Vec6 dstate_inv = dstate.cwiseInverse();
    ScaledModel sm;
    sm.a.resize(static_cast<size_t>(n_steps));
    sm.b.resize(static_cast<size_t>(n_steps));
    for (int k = 0; k < n_steps; ++k) {
        sm.a[k] = dstate_inv.asDiagonal() * spec.model.a_mats[k] * dstate.asDiagonal();
        sm.b[k] = dstate_inv.asDiagonal() * spec.model.b_mats[k] * spec.scaling.control_scale;
    }
    sm.psi.resize(static_cast<size_t>(n_steps));
    Mat6 p = Mat6::Identity();
    for (int k = n_steps - 1; k >= 0; --k) {
        sm.psi[k] = p * sm.b[k];
        p = p * sm.a[k];
    }
    sm.t0 = p;
    return sm;
}

} // namespace

std::vector<Vec2> ellipse_samples(const ConjunctionGeometry& geometry, int count) {
    if (count < 1) throw Error(ErrorCode::ShapeMismatch, "sample count must be >= 1");
    const double p = geometry.threshold;
    if (!(p > 0.0)) {
        throw Error(ErrorCode::TargetUnreachable, "nonpositive threshold has no ellipse");
    }
    Eigen::SelfAdjointEigenSolver<Mat2> eig(geometry.combined_cov);
    if (eig.eigenvalues().minCoeff() <= 0.0) {
        throw Error(ErrorCode::SingularProjectedCovariance, "covariance not positive definite");
    }
    const Mat2 half = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal() *
                      eig.eigenvectors().transpose();
    std::vector<Vec2> points;
    points.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double theta = 2.0 * M_PI * i / count;
        points.push_back(std::sqrt(p) * (half * Vec2(std::cos(theta), std::sin(theta))));
    }
    return points;
}

HalfPlaneSample halfplane_plan(const PlannerSpec& spec, const Vec2& boundary_point,
                               std::vector<Vec3>* controls) {
    if (spec.mode != PlannerMode::Standard || spec.control_lower_bound) {
        throw Error(ErrorCode::InfeasibleSpec,
                    "half-plane subproblems require Standard mode without a lower bound");
    }
    const int n_steps = spec.model.reference.n_knots() - 1;
    const ScaledModel sm = scale_model(spec);
    const TerminalPocData poc = terminal_poc_data(spec);
    const Vec6 dx1 =
        spec.scaling.state_scale().cwiseInverse().asDiagonal() * spec.initial_delta_state;
    const double ub = spec.control_upper_bound / spec.scaling.control_scale;

    HalfPlaneSample sample;
    sample.boundary_point = boundary_point;
    sample.outward_normal = (poc.cov_inverse * boundary_point).normalized();
    const Vec2& nrm = sample.outward_normal;

    // Variables: per step (u_k in R^3, epigraph t_k), then the unit marker.
    const int n_vars = 4 * n_steps + 1;
    const int unit_col = 4 * n_steps;
    auto ucol = [](int k) { return 4 * k; };
    auto tcol = [](int k) { return 4 * k + 3; };

    std::vector<Eigen::Triplet<double>> trips;
    std::vector<double> rhs;
    int row = 0;
    auto emit = [&](double b) {
        rhs.push_back(b);
        ++row;
    };

    // Zero cone: the unit marker.
    trips.emplace_back(row, unit_col, 1.0);
    emit(1.0);

    // Nonneg: half-plane n^T (phi dx_N + offset) >= n^T r(theta).
    const double rhs_val = nrm.dot(boundary_point) - nrm.dot(poc.offset) -
                           nrm.dot(poc.phi * (sm.t0 * dx1));
    for (int k = 0; k < n_steps; ++k) {
        const Eigen::RowVector3d coef = nrm.transpose() * poc.phi * sm.psi[k];
        for (int j = 0; j < 3; ++j) {
            if (coef[j] != 0.0) trips.emplace_back(row, ucol(k) + j, -coef[j]);
        }
    }
    emit(-rhs_val);

    // Per-step epigraph ||(2u, t - 1)|| <= t + 1 and bound ||u|| <= b_u.
    for (int k = 0; k < n_steps; ++k) {
        trips.emplace_back(row, tcol(k), -1.0);
        trips.emplace_back(row, unit_col, -1.0);
        emit(0.0);
        for (int j = 0; j < 3; ++j) {
            trips.emplace_back(row, ucol(k) + j, -2.0);
            emit(0.0);
        }
        trips.emplace_back(row, tcol(k), -1.0);
        trips.emplace_back(row, unit_col, 1.0);
        emit(0.0);
    }
    for (int k = 0; k < n_steps; ++k) {
        trips.emplace_back(row, unit_col, -ub);
        emit(0.0);
        for (int j = 0; j < 3; ++j) {
            trips.emplace_back(row, ucol(k) + j, -1.0);
            emit(0.0);
        }
    }

    conic::ConicProblem prob;
    prob.objective.setZero(n_vars);
    for (int k = 0; k < n_steps; ++k) prob.objective[tcol(k)] = 1.0;
    prob.rhs = Eigen::Map<const VectorXd>(rhs.data(), static_cast<int>(rhs.size()));
    prob.constraint_matrix.resize(row, n_vars);
    prob.constraint_matrix.setFromTriplets(trips.begin(), trips.end());
    prob.cone_spec.push_back({conic::ConeKind::Zero, 1});
    prob.cone_spec.push_back({conic::ConeKind::Nonneg, 1});
    for (int k = 0; k < n_steps; ++k) prob.cone_spec.push_back({conic::ConeKind::SecondOrder, 5});
    for (int k = 0; k < n_steps; ++k) prob.cone_spec.push_back({conic::ConeKind::SecondOrder, 4});

    const conic::ConicSolution sol = conic::solve(prob);
    sample.feasible = sol.status == conic::SolveStatus::Optimal;
    sample.cost = sample.feasible ? sol.primal_obj : std::numeric_limits<double>::infinity();
    if (sample.feasible && controls) {
        controls->resize(static_cast<size_t>(n_steps));
        for (int k = 0; k < n_steps; ++k) {
            (*controls)[static_cast<size_t>(k)] =
                spec.scaling.control_scale * sol.primal.segment(ucol(k), 3);
        }
    }
    return sample;
}

ScanResult halfplane_scan(const PlannerSpec& spec, int count) {
    const std::vector<Vec2> points = ellipse_samples(spec.geometry, count);
    ScanResult result;
    result.samples.resize(static_cast<size_t>(count));
    std::vector<std::vector<Vec3>> controls(static_cast<size_t>(count));

#ifdef COLA_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int i = 0; i < count; ++i) {
        HalfPlaneSample s = halfplane_plan(spec, points[static_cast<size_t>(i)],
                                           &controls[static_cast<size_t>(i)]);
        s.theta = 2.0 * M_PI * i / count;
        result.samples[static_cast<size_t>(i)] = s;
    }

    result.best_index = -1;
    for (int i = 0; i < count; ++i) {
        const HalfPlaneSample& s = result.samples[static_cast<size_t>(i)];
        if (s.feasible && (result.best_index < 0 || s.cost < result.best_cost)) {
            result.best_index = i;
            result.best_cost = s.cost;
        }
    }
    if (result.best_index < 0) {
        throw Error(ErrorCode::AllSamplesInfeasible, "no feasible half-plane subproblem");
    }
    result.best_controls = controls[static_cast<size_t>(result.best_index)];
    return result;
}

} // namespace cola
