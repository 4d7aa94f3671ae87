#include "cola/relaxation.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "cola/linalg/symmetry.hpp"

namespace cola {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using linalg::svec;
using linalg::svec_dim;
using linalg::svec_index;

constexpr double kRatioCap = 1e16;
constexpr double kCertifiedRatio = 1e4;

// Accumulates the svec coefficients of a symmetric matrix functional
// tr(C * M_k) into a triplet list, offset to block k's flat segment.
void add_block_functional(std::vector<Eigen::Triplet<double>>& trips, int row,
                          const MomentLayout& layout, int k, const MatrixXd& coeff,
                          double scale = 1.0) {
    const VectorXd v = svec(coeff);
    const int off = layout.block_offset(k);
    for (int i = 0; i < v.size(); ++i) {
        if (v[i] != 0.0) trips.emplace_back(row, off + i, scale * v[i]);
    }
}

MatrixXd sym_outer(const VectorXd& a, const VectorXd& b) {
    return 0.5 * (a * b.transpose() + b * a.transpose());
}

} // namespace

int MomentLayout::block_len(int k) const { return svec_dim(block_order(k)); }

int MomentLayout::flat_index(int k, int i, int j) const {
    return block_offset(k) + svec_index(block_order(k), i, j);
}

MatrixXd MomentLayout::moment_matrix(const VectorXd& flat, int k) const {
    return linalg::smat(flat.segment(block_offset(k), block_len(k)), block_order(k));
}

Vec6 MomentLayout::l_x(const VectorXd& flat, int k) const {
    Vec6 x;
    for (int i = 0; i < state_dim; ++i) {
        x[i] = flat[flat_index(k, i + 1, 0)] / linalg::kSqrt2;
    }
    return x;
}

Mat6 MomentLayout::l_xx(const VectorXd& flat, int k) const {
    Mat6 m;
    for (int i = 0; i < state_dim; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double raw = flat[flat_index(k, i + 1, j + 1)];
            const double v = (i == j) ? raw : raw / linalg::kSqrt2;
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return m;
}

Vec3 MomentLayout::l_u(const VectorXd& flat, int k) const {
    Vec3 u;
    for (int i = 0; i < control_dim; ++i) {
        u[i] = flat[flat_index(k, state_dim + 1 + i, 0)] / linalg::kSqrt2;
    }
    return u;
}

Mat3 MomentLayout::l_uu(const VectorXd& flat, int k) const {
    Mat3 m;
    for (int i = 0; i < control_dim; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double raw = flat[flat_index(k, state_dim + 1 + i, state_dim + 1 + j)];
            const double v = (i == j) ? raw : raw / linalg::kSqrt2;
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return m;
}

Mat63 MomentLayout::l_xu(const VectorXd& flat, int k) const {
    Mat63 m;
    for (int i = 0; i < state_dim; ++i) {
        for (int j = 0; j < control_dim; ++j) {
            m(i, j) = flat[flat_index(k, state_dim + 1 + j, i + 1)] / linalg::kSqrt2;
        }
    }
    return m;
}

VectorXd MomentLayout::flat_from_stacks(const std::vector<VectorXd>& z) const {
    VectorXd flat = VectorXd::Zero(epigraph_index >= 0 ? flat_dim + 1 : flat_dim);
    for (int k = 0; k < n_knots; ++k) {
        const MatrixXd m = z[static_cast<size_t>(k)] * z[static_cast<size_t>(k)].transpose();
        flat.segment(block_offset(k), block_len(k)) = svec(m);
    }
    return flat;
}

TerminalPocData terminal_poc_data(const PlannerSpec& spec) {
    TerminalPocData data;
    const auto& geom = spec.geometry;
    const Vec3 ref_n = spec.model.reference.knots.back().position;
    const Vec3 sec = geom.secondary_state.position;

    Mat26 pos_select = Mat26::Zero();
    pos_select.block<2, 3>(0, 0) = geom.frame.projector * spec.scaling.position_scale;
    data.phi = pos_select;
    data.offset = geom.frame.projector * (ref_n - sec);
    data.cov_inverse = geom.combined_cov.inverse();
    data.constant = data.offset.dot(data.cov_inverse * data.offset);
    return data;
}

conic::ConicProblem shor_relax_generic(const MatrixXd& q, const VectorXd& d, const MatrixXd& a,
                                       double b) {
    const int n = static_cast<int>(q.rows());
    const int order = n + 1;
    const int nv = svec_dim(order);

    conic::ConicProblem prob;
    prob.objective.setZero(nv);
    {
        MatrixXd c = MatrixXd::Zero(order, order);
        c.block(1, 1, n, n) = 0.5 * (q + q.transpose());
        VectorXd dh = VectorXd::Zero(order);
        dh.tail(n) = d;
        VectorXd e0 = VectorXd::Zero(order);
        e0[0] = 1.0;
        c += sym_outer(dh, e0);
        prob.objective = svec(c);
    }

    std::vector<Eigen::Triplet<double>> trips;
    prob.rhs.setZero(2 + nv);
    // Corner normalization M[0,0] = 1.
    trips.emplace_back(0, svec_index(order, 0, 0), 1.0);
    prob.rhs[0] = 1.0;
    // tr(A L_xx(M)) = b.
    {
        MatrixXd c = MatrixXd::Zero(order, order);
        c.block(1, 1, n, n) = 0.5 * (a + a.transpose());
        const VectorXd v = svec(c);
        for (int i = 0; i < v.size(); ++i) {
            if (v[i] != 0.0) trips.emplace_back(1, i, v[i]);
        }
    }
    // PSD slack: s = x.
    for (int i = 0; i < nv; ++i) trips.emplace_back(2 + i, i, -1.0);

    prob.constraint_matrix.resize(2 + nv, nv);
    prob.constraint_matrix.setFromTriplets(trips.begin(), trips.end());
    prob.cone_spec = {{conic::ConeKind::Zero, 2}, {conic::ConeKind::Psd, order}};
    return prob;
}

ShorSolution shor_extract_generic(const conic::ConicSolution& solution, int n_vars) {
    ShorSolution out;
    out.status = solution.status;
    out.optimum = solution.primal_obj;
    const int order = n_vars + 1;
    const MatrixXd m = linalg::smat(solution.primal.head(svec_dim(order)), order);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
    const VectorXd evals = eig.eigenvalues();
    const double l1 = evals[order - 1];
    const double l2 = order >= 2 ? evals[order - 2] : 0.0;
    out.eigenvalue_ratio = (l2 <= 0.0) ? kRatioCap : std::min(l1 / l2, kRatioCap);
    out.certified = solution.status == conic::SolveStatus::Optimal &&
                    out.eigenvalue_ratio >= kCertifiedRatio;
    VectorXd z = std::sqrt(std::max(l1, 0.0)) * eig.eigenvectors().col(order - 1);
    if (std::abs(eig.eigenvectors().col(order - 1)[0]) < 1e-6) {
        throw Error(ErrorCode::LeadingEntryNearZero, "leading moment entry too small");
    }
    z /= z[0];
    out.x = z.tail(n_vars);
    return out;
}

std::pair<conic::ConicProblem, MomentLayout> build_sdp(const PlannerSpec& spec) {
    const int n = spec.model.reference.n_knots();
    const int n_steps = n - 1;
    if (n < 2) throw Error(ErrorCode::InfeasibleSpec, "need at least two knots");
    if (spec.control_lower_bound &&
        (*spec.control_lower_bound < 0.0 || *spec.control_lower_bound >= spec.control_upper_bound)) {
        throw Error(ErrorCode::InfeasibleSpec, "control bounds require 0 <= b_l < b_u");
    }
    if (spec.mode == PlannerMode::Contingency && !(spec.penalty_weight > 0.0)) {
        throw Error(ErrorCode::InfeasibleSpec, "contingency mode requires alpha > 0");
    }
    if (!std::isfinite(spec.geometry.threshold)) {
        throw Error(ErrorCode::InfeasibleSpec, "geometry threshold must be finite");
    }

    MomentLayout layout;
    layout.n_knots = n;
    layout.block_dims.assign(static_cast<size_t>(n), 10);
    layout.block_dims.back() = 7;
    layout.block_offsets.resize(static_cast<size_t>(n));
    int off = 0;
    for (int k = 0; k < n; ++k) {
        layout.block_offsets[static_cast<size_t>(k)] = off;
        off += svec_dim(layout.block_order(k));
    }
    layout.flat_dim = off;
    const bool contingency = spec.mode == PlannerMode::Contingency;
    if (contingency) layout.epigraph_index = layout.flat_dim;
    const int n_vars = layout.flat_dim + (contingency ? 1 : 0);

    // Scaled model quantities.
    const Vec6 dstate = spec.scaling.state_scale();
    const Vec6 dstate_inv = dstate.cwiseInverse();
    std::vector<Mat6> a_scaled(static_cast<size_t>(n_steps));
    std::vector<Mat63> b_scaled(static_cast<size_t>(n_steps));
    for (int k = 0; k < n_steps; ++k) {
        a_scaled[k] = dstate_inv.asDiagonal() * spec.model.a_mats[k] * dstate.asDiagonal();
        b_scaled[k] = dstate_inv.asDiagonal() * spec.model.b_mats[k] * spec.scaling.control_scale;
    }
    const Vec6 dx1 = dstate_inv.asDiagonal() * spec.initial_delta_state;
    const double ub = spec.control_upper_bound / spec.scaling.control_scale;

    const TerminalPocData poc = terminal_poc_data(spec);
    const double p = spec.geometry.threshold;

    // Terminal-block coefficient matrix of tr(C^{-1} c(M_N)).
    MatrixXd poc_coeff = MatrixXd::Zero(7, 7);
    {
        const Vec6 lin = 2.0 * poc.phi.transpose() * poc.cov_inverse * poc.offset;
        VectorXd lin7 = VectorXd::Zero(7);
        lin7.tail(6) = lin;
        VectorXd e0 = VectorXd::Zero(7);
        e0[0] = 1.0;
        poc_coeff += sym_outer(lin7, e0);
        poc_coeff.block(1, 1, 6, 6) += poc.phi.transpose() * poc.cov_inverse * poc.phi;
    }

    std::vector<Eigen::Triplet<double>> trips;
    int row = 0;

    // --- Zero cone: corners, initial condition, dynamics (knot order) ---
    std::vector<double> rhs;

    auto emit = [&](double b_val) {
        rhs.push_back(b_val);
        ++row;
    };

    {
        // Knot 0: corner + initial condition.
        MatrixXd c0 = MatrixXd::Zero(10, 10);
        c0(0, 0) = 1.0;
        add_block_functional(trips, row, layout, 0, c0);
        emit(1.0);
        for (int i = 0; i < 6; ++i) {
            VectorXd ei = VectorXd::Zero(10), e0 = VectorXd::Zero(10);
            ei[i + 1] = 1.0;
            e0[0] = 1.0;
            add_block_functional(trips, row, layout, 0, sym_outer(ei, e0));
            emit(dx1[i]);
        }
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j <= i; ++j) {
                VectorXd ei = VectorXd::Zero(10), ej = VectorXd::Zero(10);
                ei[i + 1] = 1.0;
                ej[j + 1] = 1.0;
                add_block_functional(trips, row, layout, 0, sym_outer(ei, ej));
                emit(dx1[i] * dx1[j]);
            }
        }
    }
    for (int k = 0; k < n_steps; ++k) {
        const int next = k + 1;
        const int next_order = layout.block_order(next);
        // Corner of knot k+1.
        MatrixXd ck = MatrixXd::Zero(next_order, next_order);
        ck(0, 0) = 1.0;
        add_block_functional(trips, row, layout, next, ck);
        emit(1.0);

        // Mean dynamics: L_x(M_{k+1}) = A L_x(M_k) + B L_u(M_k).
        for (int i = 0; i < 6; ++i) {
            VectorXd ei = VectorXd::Zero(next_order), e0n = VectorXd::Zero(next_order);
            ei[i + 1] = 1.0;
            e0n[0] = 1.0;
            add_block_functional(trips, row, layout, next, sym_outer(ei, e0n));

            VectorXd g = VectorXd::Zero(10);
            for (int j = 0; j < 6; ++j) g[j + 1] = -a_scaled[k](i, j);
            for (int j = 0; j < 3; ++j) g[7 + j] = -b_scaled[k](i, j);
            VectorXd e0 = VectorXd::Zero(10);
            e0[0] = 1.0;
            add_block_functional(trips, row, layout, k, sym_outer(g, e0));
            emit(0.0);
        }

        // Redundant outer-product dynamics on the full second-moment block:
        // L_xx(M_{k+1}) = T * [L_xx L_xu; L_xu^T L_uu](M_k) * T^T, T = [A B].
        Eigen::Matrix<double, 6, 9> t;
        t << a_scaled[k], b_scaled[k];
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j <= i; ++j) {
                VectorXd ei = VectorXd::Zero(next_order), ej = VectorXd::Zero(next_order);
                ei[i + 1] = 1.0;
                ej[j + 1] = 1.0;
                add_block_functional(trips, row, layout, next, sym_outer(ei, ej));

                VectorXd si = VectorXd::Zero(10), sj = VectorXd::Zero(10);
                si.tail(9) = t.row(i);
                sj.tail(9) = t.row(j);
                add_block_functional(trips, row, layout, k, sym_outer(si, sj), -1.0);
                emit(0.0);
            }
        }
    }
    const int zero_rows = row;

    // --- Nonneg cone: thrust lower bound, then the PoC rows ---
    if (spec.control_lower_bound) {
        const double lb = *spec.control_lower_bound / spec.scaling.control_scale;
        for (int k = 0; k < n_steps; ++k) {
            MatrixXd c = MatrixXd::Zero(10, 10);
            for (int j = 0; j < 3; ++j) c(7 + j, 7 + j) = -1.0;
            add_block_functional(trips, row, layout, k, c);
            emit(-lb * lb);
        }
    }
    if (!contingency) {
        // tr(C^{-1} b) + tr(C^{-1} c(M_N)) >= p.
        add_block_functional(trips, row, layout, n - 1, poc_coeff, -1.0);
        emit(poc.constant - p);
    } else {
        // Epigraph of |gap|: t >= gap and t >= -gap with
        // gap = tr(C^{-1}b) + tr(C^{-1}c(M_N)) - p.
        add_block_functional(trips, row, layout, n - 1, poc_coeff, 1.0);
        trips.emplace_back(row, layout.epigraph_index, -1.0);
        emit(p - poc.constant);
        add_block_functional(trips, row, layout, n - 1, poc_coeff, -1.0);
        trips.emplace_back(row, layout.epigraph_index, -1.0);
        emit(poc.constant - p);
    }
    const int nonneg_rows = row - zero_rows;

    // --- Second-order cones: ||L_u(M_k)|| <= b_u * M_k[0,0] ---
    for (int k = 0; k < n_steps; ++k) {
        MatrixXd head = MatrixXd::Zero(10, 10);
        head(0, 0) = -ub;
        add_block_functional(trips, row, layout, k, head);
        emit(0.0);
        for (int j = 0; j < 3; ++j) {
            VectorXd eu = VectorXd::Zero(10), e0 = VectorXd::Zero(10);
            eu[7 + j] = 1.0;
            e0[0] = 1.0;
            add_block_functional(trips, row, layout, k, sym_outer(eu, e0), -1.0);
            emit(0.0);
        }
    }

    // --- PSD cones: each moment block ---
    for (int k = 0; k < n; ++k) {
        const int boff = layout.block_offset(k);
        for (int i = 0; i < layout.block_len(k); ++i) {
            trips.emplace_back(row, boff + i, -1.0);
            emit(0.0);
        }
    }

    conic::ConicProblem prob;
    prob.objective.setZero(n_vars);
    for (int k = 0; k < n_steps; ++k) {
        for (int j = 0; j < 3; ++j) prob.objective[layout.flat_index(k, 7 + j, 7 + j)] = 1.0;
    }
    if (contingency) prob.objective[layout.epigraph_index] = spec.penalty_weight;

    prob.rhs = Eigen::Map<const VectorXd>(rhs.data(), static_cast<int>(rhs.size()));
    prob.constraint_matrix.resize(row, n_vars);
    prob.constraint_matrix.setFromTriplets(trips.begin(), trips.end());

    prob.cone_spec.push_back({conic::ConeKind::Zero, zero_rows});
    prob.cone_spec.push_back({conic::ConeKind::Nonneg, nonneg_rows});
    for (int k = 0; k < n_steps; ++k) prob.cone_spec.push_back({conic::ConeKind::SecondOrder, 4});
    for (int k = 0; k < n; ++k) {
        prob.cone_spec.push_back({conic::ConeKind::Psd, layout.block_order(k)});
    }
    return {std::move(prob), std::move(layout)};
}

ManeuverPlan extract_solution(const conic::ConicSolution& solution, const MomentLayout& layout,
                              const PlannerSpec& spec) {
    if (solution.status != conic::SolveStatus::Optimal) {
        throw Error(ErrorCode::NotOptimal,
                    std::string("solver status ") + conic::status_name(solution.status));
    }
    const int n = layout.n_knots;
    ManeuverPlan plan;
    plan.solver_status = solution.status;
    plan.solver_gap = solution.gap;
    plan.solver_iterations = solution.iterations;
    plan.tightness.per_block_eigenvalue_ratio.resize(static_cast<size_t>(n));
    plan.delta_states.resize(static_cast<size_t>(n));
    plan.controls.resize(static_cast<size_t>(n - 1));

    const Vec6 dstate = spec.scaling.state_scale();
    double scaled_obj = 0.0;

    for (int k = 0; k < n; ++k) {
        const int order = layout.block_order(k);
        const MatrixXd m = layout.moment_matrix(solution.primal, k);
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
        const VectorXd evals = eig.eigenvalues();
        const double l1 = evals[order - 1];
        const double l2 = evals[order - 2];
        const double ratio = (l2 <= 0.0) ? kRatioCap : std::min(l1 / l2, kRatioCap);
        plan.tightness.per_block_eigenvalue_ratio[static_cast<size_t>(k)] = ratio;

        VectorXd v1 = eig.eigenvectors().col(order - 1);
        if (std::abs(v1[0]) < 1e-6) {
            throw Error(ErrorCode::LeadingEntryNearZero,
                        "block " + std::to_string(k) + " leading entry " + std::to_string(v1[0]));
        }
        VectorXd z = std::sqrt(std::max(l1, 0.0)) * v1;
        if (z[0] < 0.0) z = -z;
        z /= z[0];

        plan.delta_states[static_cast<size_t>(k)] =
            dstate.asDiagonal() * z.segment(1, 6);
        if (k < n - 1) {
            plan.controls[static_cast<size_t>(k)] = spec.scaling.control_scale * z.segment(7, 3);
            scaled_obj += layout.l_uu(solution.primal, k).trace();
        }
    }
    plan.tightness.min_ratio =
        *std::min_element(plan.tightness.per_block_eigenvalue_ratio.begin(),
                          plan.tightness.per_block_eigenvalue_ratio.end());
    plan.tightness.certified = plan.tightness.min_ratio >= kCertifiedRatio;
    plan.objective = scaled_obj * spec.scaling.control_scale * spec.scaling.control_scale;

    const Vec3 ref_n = spec.model.reference.knots.back().position;
    const Vec3 dr_n = plan.delta_states.back().head<3>();
    const Vec2 rb = spec.geometry.frame.projector *
                    (ref_n + dr_n - spec.geometry.secondary_state.position);
    plan.achieved = poc_estimate(rb, spec.geometry.combined_cov, spec.geometry.hard_body_radius);
    plan.terminal_gap = plan.achieved.mahalanobis_sq - spec.geometry.threshold;
    return plan;
}

} // namespace cola
