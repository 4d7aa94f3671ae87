#include "cola/conic/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <vector>

#include "cola/linalg/symmetry.hpp"

namespace cola::conic {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using linalg::Backend;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kRefinementRounds = 2;

// A scaling unit is the granularity at which the Nesterov-Todd scaling is
// block diagonal: one unit per nonnegative ray, per second-order cone, per
// PSD block.
struct Unit {
    ConeKind kind;
    int order;  // matrix order for Psd, slack length otherwise
    int offset; // global slack offset
    int len;    // slack length
    int comp = -1;
};

// Columns that share an inequality unit must be eliminated together; the
// scaled Gram matrix S = A_in^T W^{-2} A_in is block diagonal over these
// column components.
struct Component {
    std::vector<int> cols;
    std::vector<int> units;   // unit indices
    std::vector<int> in_rows; // global slack rows, concatenated unit order
    std::vector<int> eq_rows; // global rows of zero-cone constraints touching cols
    MatrixXd a_in;            // |in_rows| x |cols|
    MatrixXd a_eq;            // |eq_rows| x |cols|

    // Iteration workspace: LDL^T factor of the local quasi-definite block
    //   [ eps*I    A_in^T      ]
    //   [ A_in    -W^2 - dlt*I ]
    // (factoring the augmented form instead of the A_in^T W^{-2} A_in normal
    // equations avoids squaring the scaling's condition number).
    MatrixXd kmat;   // (|cols| + |in_rows|)^2
    MatrixXd v_eq;   // |cols| x |eq_rows|: x-block of K^{-1} [a_eq^T; 0]
    MatrixXd y_local;
};

struct UnitScaling {
    // Nonneg
    double w2 = 1.0, w = 1.0, lam1 = 1.0;
    // SecondOrder
    double eta = 1.0;
    VectorXd wbar;
    MatrixXd soc_w, soc_winv;
    VectorXd lam;
    // Psd
    MatrixXd w_half, w_half_inv; // W_nt^{1/2}, W_nt^{-1/2}
    MatrixXd lam_mat;
    VectorXd lam_eval;
    MatrixXd lam_evec;
    // Dense W^2 in slack coordinates (SecondOrder and Psd).
    MatrixXd omega;
};

struct Workspace {
    const ConicProblem* prob = nullptr;
    SolverSettings settings;

    int n = 0, m = 0, m_eq = 0;
    double nu = 0.0; // total barrier degree

    std::vector<Unit> units;
    std::vector<Component> comps;
    std::vector<int> eq_rows;        // global slack rows of zero cones
    std::vector<int> eq_index_of;    // global row -> eq index (-1 otherwise)
    Eigen::SparseMatrix<double> at;  // A^T

    std::vector<UnitScaling> scalings;
    MatrixXd y_schur; // m_eq x m_eq, Cholesky factor after assembly

    double eps_s = 0.0, delta_y = 0.0;
};

int barrier_degree(const ConeBlock& blk) {
    switch (blk.kind) {
    case ConeKind::Zero: return 0;
    case ConeKind::Nonneg: return blk.dim;
    case ConeKind::SecondOrder: return 1;
    case ConeKind::Psd: return blk.dim;
    }
    return 0;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }
    void join(int a, int b) { parent[find(a)] = find(b); }
};

// Builds units, column components and the dense per-component slices of A.
void build_structure(Workspace& ws) {
    const ConicProblem& p = *ws.prob;
    ws.n = p.num_vars();
    ws.m = p.num_rows();
    ws.at = p.constraint_matrix.transpose();

    ws.eq_index_of.assign(ws.m, -1);
    int offset = 0;
    for (const auto& blk : p.cone_spec) {
        const int len = blk.slack_dim();
        switch (blk.kind) {
        case ConeKind::Zero:
            for (int i = 0; i < len; ++i) {
                ws.eq_index_of[offset + i] = static_cast<int>(ws.eq_rows.size());
                ws.eq_rows.push_back(offset + i);
            }
            break;
        case ConeKind::Nonneg:
            for (int i = 0; i < len; ++i) ws.units.push_back({blk.kind, 1, offset + i, 1});
            break;
        case ConeKind::SecondOrder:
            ws.units.push_back({blk.kind, blk.dim, offset, len});
            break;
        case ConeKind::Psd:
            ws.units.push_back({blk.kind, blk.dim, offset, len});
            break;
        }
        ws.nu += barrier_degree(blk);
        offset += len;
    }
    ws.m_eq = static_cast<int>(ws.eq_rows.size());

    // Row -> columns via A^T columns (A is row-sliced through A^T's columns).
    auto row_cols = [&](int row, auto&& fn) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(ws.at, row); it; ++it) {
            fn(static_cast<int>(it.row()), it.value());
        }
    };

    UnionFind uf(ws.n);
    for (const auto& unit : ws.units) {
        int first = -1;
        for (int r = unit.offset; r < unit.offset + unit.len; ++r) {
            row_cols(r, [&](int col, double) {
                if (first < 0) first = col;
                else uf.join(first, col);
            });
        }
    }

    std::vector<int> comp_of(ws.n, -1);
    for (int col = 0; col < ws.n; ++col) {
        const int root = uf.find(col);
        if (comp_of[root] < 0) {
            comp_of[root] = static_cast<int>(ws.comps.size());
            ws.comps.emplace_back();
        }
        comp_of[col] = comp_of[root];
        ws.comps[comp_of[col]].cols.push_back(col);
    }

    std::vector<int> local_of(ws.n, -1);
    for (auto& comp : ws.comps) {
        for (int i = 0; i < static_cast<int>(comp.cols.size()); ++i) local_of[comp.cols[i]] = i;
    }

    for (int u = 0; u < static_cast<int>(ws.units.size()); ++u) {
        Unit& unit = ws.units[u];
        int comp = -1;
        for (int r = unit.offset; r < unit.offset + unit.len && comp < 0; ++r) {
            row_cols(r, [&](int col, double) { comp = comp_of[col]; });
        }
        // A unit whose rows touch no variable would be an all-zero row block;
        // validate() rejects that earlier.
        unit.comp = comp;
        ws.comps[comp].units.push_back(u);
    }

    for (auto& comp : ws.comps) {
        for (int u : comp.units) {
            const Unit& unit = ws.units[u];
            for (int r = unit.offset; r < unit.offset + unit.len; ++r) comp.in_rows.push_back(r);
        }
        const int nc = static_cast<int>(comp.cols.size());
        comp.a_in = MatrixXd::Zero(static_cast<int>(comp.in_rows.size()), nc);
        for (int lr = 0; lr < static_cast<int>(comp.in_rows.size()); ++lr) {
            row_cols(comp.in_rows[lr], [&](int col, double v) { comp.a_in(lr, local_of[col]) = v; });
        }
    }

    // Equality rows attach to every component whose columns they touch.
    std::vector<std::vector<int>> comp_eq(ws.comps.size());
    for (int e = 0; e < ws.m_eq; ++e) {
        row_cols(ws.eq_rows[e], [&](int col, double) { comp_eq[comp_of[col]].push_back(e); });
    }
    for (int c = 0; c < static_cast<int>(ws.comps.size()); ++c) {
        auto& rows = comp_eq[c];
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        Component& comp = ws.comps[c];
        comp.eq_rows = rows;
        comp.a_eq = MatrixXd::Zero(static_cast<int>(rows.size()), static_cast<int>(comp.cols.size()));
        for (int le = 0; le < static_cast<int>(rows.size()); ++le) {
            row_cols(ws.eq_rows[rows[le]],
                     [&](int col, double v) {
                         if (comp_of[col] == c) comp.a_eq(le, local_of[col]) = v;
                     });
        }
    }
}

// ---- cone helpers -------------------------------------------------------

void soc_matrices(UnitScaling& sc, int q) {
    const double a = sc.wbar[0];
    const auto qv = sc.wbar.tail(q - 1);
    MatrixXd w(q, q);
    w(0, 0) = a;
    w.row(0).tail(q - 1) = qv.transpose();
    w.col(0).tail(q - 1) = qv;
    w.bottomRightCorner(q - 1, q - 1) =
        MatrixXd::Identity(q - 1, q - 1) + qv * qv.transpose() / (1.0 + a);
    sc.soc_w = sc.eta * w;

    MatrixXd winv(q, q);
    winv(0, 0) = a;
    winv.row(0).tail(q - 1) = -qv.transpose();
    winv.col(0).tail(q - 1) = -qv;
    winv.bottomRightCorner(q - 1, q - 1) = w.bottomRightCorner(q - 1, q - 1);
    sc.soc_winv = winv / sc.eta;

    MatrixXd j = -MatrixXd::Identity(q, q);
    j(0, 0) = 1.0;
    sc.omega = sc.eta * sc.eta * (2.0 * sc.wbar * sc.wbar.transpose() - j);
}

// Symmetric square root / inverse square root with a floor on eigenvalues.
void sym_sqrt(const MatrixXd& a, MatrixXd& root, MatrixXd& inv_root) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a);
    VectorXd d = eig.eigenvalues();
    const double floor = std::max(d.maxCoeff(), 1e-300) * 1e-16;
    for (int i = 0; i < d.size(); ++i) d[i] = std::max(d[i], floor);
    const VectorXd sq = d.cwiseSqrt();
    root = eig.eigenvectors() * sq.asDiagonal() * eig.eigenvectors().transpose();
    inv_root =
        eig.eigenvectors() * sq.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

bool update_scaling(const Unit& unit, const VectorXd& s, const VectorXd& y, UnitScaling& sc) {
    switch (unit.kind) {
    case ConeKind::Nonneg: {
        const double sv = s[unit.offset], yv = y[unit.offset];
        if (!(sv > 0.0) || !(yv > 0.0)) return false;
        sc.w2 = sv / yv;
        sc.w = std::sqrt(sc.w2);
        sc.lam1 = std::sqrt(sv * yv);
        return true;
    }
    case ConeKind::SecondOrder: {
        const int q = unit.len;
        const auto sv = s.segment(unit.offset, q);
        const auto yv = y.segment(unit.offset, q);
        const double sres = sv[0] * sv[0] - sv.tail(q - 1).squaredNorm();
        const double yres = yv[0] * yv[0] - yv.tail(q - 1).squaredNorm();
        if (!(sres > 0.0) || !(yres > 0.0) || !(sv[0] > 0.0) || !(yv[0] > 0.0)) return false;
        const double snorm = std::sqrt(sres), ynorm = std::sqrt(yres);
        VectorXd sbar = sv / snorm, ybar = yv / ynorm;
        const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(ybar)));
        sc.wbar.resize(q);
        sc.wbar[0] = (0.5 / gamma) * (sbar[0] + ybar[0]);
        sc.wbar.tail(q - 1) = (0.5 / gamma) * (sbar.tail(q - 1) - ybar.tail(q - 1));
        sc.eta = std::sqrt(snorm / ynorm);
        soc_matrices(sc, q);
        sc.lam = sc.soc_w * yv;
        return true;
    }
    case ConeKind::Psd: {
        const int p = unit.order;
        const MatrixXd smat = linalg::smat(s.segment(unit.offset, unit.len), p);
        const MatrixXd ymat = linalg::smat(y.segment(unit.offset, unit.len), p);
        MatrixXd s_half, s_half_inv;
        sym_sqrt(smat, s_half, s_half_inv);
        MatrixXd inner = s_half * ymat * s_half;
        inner = 0.5 * (inner + inner.transpose()).eval();
        MatrixXd inner_half, inner_half_inv;
        sym_sqrt(inner, inner_half, inner_half_inv);
        MatrixXd w_nt = s_half * inner_half_inv * s_half;
        w_nt = 0.5 * (w_nt + w_nt.transpose()).eval();
        sym_sqrt(w_nt, sc.w_half, sc.w_half_inv);
        sc.omega = linalg::congruence_operator(w_nt);
        MatrixXd lam = sc.w_half_inv * smat * sc.w_half_inv;
        sc.lam_mat = 0.5 * (lam + lam.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sc.lam_mat);
        sc.lam_eval = eig.eigenvalues();
        sc.lam_evec = eig.eigenvectors();
        return sc.lam_eval.minCoeff() > 0.0;
    }
    case ConeKind::Zero: break;
    }
    return false;
}

// lambda-space image of a dual-side direction: W * v.
VectorXd scale_dual(const Unit& unit, const UnitScaling& sc, const VectorXd& v) {
    switch (unit.kind) {
    case ConeKind::Nonneg: return VectorXd::Constant(1, sc.w * v[0]);
    case ConeKind::SecondOrder: return sc.soc_w * v;
    case ConeKind::Psd: {
        MatrixXd m = sc.w_half * linalg::smat(v, unit.order) * sc.w_half;
        return linalg::svec(0.5 * (m + m.transpose()));
    }
    case ConeKind::Zero: break;
    }
    return v;
}

// lambda-space image of a primal-side direction: W^{-T} * v.
VectorXd scale_primal(const Unit& unit, const UnitScaling& sc, const VectorXd& v) {
    switch (unit.kind) {
    case ConeKind::Nonneg: return VectorXd::Constant(1, v[0] / sc.w);
    case ConeKind::SecondOrder: return sc.soc_winv * v;
    case ConeKind::Psd: {
        MatrixXd m = sc.w_half_inv * linalg::smat(v, unit.order) * sc.w_half_inv;
        return linalg::svec(0.5 * (m + m.transpose()));
    }
    case ConeKind::Zero: break;
    }
    return v;
}

// Back to the slack space: W^T * u for a lambda-space vector.
VectorXd unscale_to_slack(const Unit& unit, const UnitScaling& sc, const VectorXd& u) {
    return scale_dual(unit, sc, u); // W is self-adjoint in all three cones
}

VectorXd jordan_product(const Unit& unit, const VectorXd& a, const VectorXd& b) {
    switch (unit.kind) {
    case ConeKind::Nonneg: return VectorXd::Constant(1, a[0] * b[0]);
    case ConeKind::SecondOrder: {
        VectorXd out(unit.len);
        out[0] = a.dot(b);
        out.tail(unit.len - 1) =
            a[0] * b.tail(unit.len - 1) + b[0] * a.tail(unit.len - 1);
        return out;
    }
    case ConeKind::Psd: {
        const MatrixXd am = linalg::smat(a, unit.order);
        const MatrixXd bm = linalg::smat(b, unit.order);
        return linalg::svec(0.5 * (am * bm + bm * am));
    }
    case ConeKind::Zero: break;
    }
    return a;
}

// Solves lambda o u = d for u.
VectorXd jordan_solve(const Unit& unit, const UnitScaling& sc, const VectorXd& d) {
    switch (unit.kind) {
    case ConeKind::Nonneg: return VectorXd::Constant(1, d[0] / sc.lam1);
    case ConeKind::SecondOrder: {
        const int q = unit.len;
        const double l0 = sc.lam[0];
        const auto lt = sc.lam.tail(q - 1);
        const double rho = l0 * l0 - lt.squaredNorm();
        VectorXd u(q);
        u[0] = (l0 * d[0] - lt.dot(d.tail(q - 1))) / rho;
        u.tail(q - 1) = (d.tail(q - 1) - u[0] * lt) / l0;
        return u;
    }
    case ConeKind::Psd: {
        const int p = unit.order;
        const MatrixXd dt = sc.lam_evec.transpose() * linalg::smat(d, p) * sc.lam_evec;
        MatrixXd ut(p, p);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) ut(i, j) = 2.0 * dt(i, j) / (sc.lam_eval[i] + sc.lam_eval[j]);
        MatrixXd u = sc.lam_evec * ut * sc.lam_evec.transpose();
        return linalg::svec(0.5 * (u + u.transpose()));
    }
    case ConeKind::Zero: break;
    }
    return d;
}

VectorXd cone_identity(const Unit& unit) {
    switch (unit.kind) {
    case ConeKind::Nonneg: return VectorXd::Ones(1);
    case ConeKind::SecondOrder: {
        VectorXd e = VectorXd::Zero(unit.len);
        e[0] = 1.0;
        return e;
    }
    case ConeKind::Psd: return linalg::svec(MatrixXd::Identity(unit.order, unit.order));
    case ConeKind::Zero: break;
    }
    return VectorXd();
}

VectorXd lambda_of(const Unit& unit, const UnitScaling& sc) {
    switch (unit.kind) {
    case ConeKind::Nonneg: return VectorXd::Constant(1, sc.lam1);
    case ConeKind::SecondOrder: return sc.lam;
    case ConeKind::Psd: return linalg::svec(sc.lam_mat);
    case ConeKind::Zero: break;
    }
    return VectorXd();
}

// Largest step with v + alpha * dv remaining in the cone (v strictly inside).
double step_to_boundary(const Unit& unit, const VectorXd& v, const VectorXd& dv) {
    switch (unit.kind) {
    case ConeKind::Nonneg:
        return dv[0] < 0.0 ? -v[0] / dv[0] : kInf;
    case ConeKind::SecondOrder: {
        const int q = unit.len;
        const double a = dv[0] * dv[0] - dv.tail(q - 1).squaredNorm();
        const double b = 2.0 * (v[0] * dv[0] - v.tail(q - 1).dot(dv.tail(q - 1)));
        const double c = v[0] * v[0] - v.tail(q - 1).squaredNorm();
        double alpha = dv[0] < 0.0 ? -v[0] / dv[0] : kInf;
        const double disc = b * b - 4.0 * a * c;
        if (std::abs(a) < 1e-300) {
            if (b < 0.0) alpha = std::min(alpha, -c / b);
        } else if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            const double r1 = (-b - sq) / (2.0 * a);
            const double r2 = (-b + sq) / (2.0 * a);
            for (double r : {std::min(r1, r2), std::max(r1, r2)}) {
                if (r > 0.0) {
                    alpha = std::min(alpha, r);
                    break;
                }
            }
        }
        return alpha;
    }
    case ConeKind::Psd: {
        const MatrixXd vm = linalg::smat(v, unit.order);
        const MatrixXd dm = linalg::smat(dv, unit.order);
        Eigen::LLT<MatrixXd> llt(vm);
        MatrixXd t;
        if (llt.info() == Eigen::Success) {
            const MatrixXd l = llt.matrixL();
            t = l.triangularView<Eigen::Lower>().solve(dm);
            t = l.triangularView<Eigen::Lower>().solve(t.transpose()).transpose();
        } else {
            MatrixXd root, inv_root;
            sym_sqrt(vm, root, inv_root);
            t = inv_root * dm * inv_root;
        }
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (t + t.transpose()));
        const double lmin = eig.eigenvalues().minCoeff();
        return lmin < 0.0 ? -1.0 / lmin : kInf;
    }
    case ConeKind::Zero: break;
    }
    return kInf;
}

// ---- KKT machinery ------------------------------------------------------

// Factors the reduced KKT system for the current scalings. Per column
// component the quasi-definite block
//   K_c = [ eps*I   A_in^T      ]
//         [ A_in   -W^2 - dlt*I ]
// is LDL^T-factored (avoiding the ill-conditioned normal-equations form),
// then the equality rows are handled by a dense Cholesky of the Schur
// complement Y = A_eq S^{-1} A_eq^T, where S^{-1} products are taken
// through the factored K_c.
bool factor_kkt(Workspace& ws) {
    std::vector<char> comp_ok(ws.comps.size(), 1);

#ifdef COLA_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int c = 0; c < static_cast<int>(ws.comps.size()); ++c) {
        Component& comp = ws.comps[c];
        const int nc = static_cast<int>(comp.cols.size());
        const int mc_in = static_cast<int>(comp.in_rows.size());
        const int dim = nc + mc_in;
        comp.kmat.setZero(dim, dim);
        comp.kmat.block(nc, 0, mc_in, nc) = comp.a_in;
        comp.kmat.block(0, nc, nc, mc_in) = comp.a_in.transpose();
        double omega_scale = 1.0;
        int row0 = 0;
        for (int u : comp.units) {
            const Unit& unit = ws.units[u];
            const UnitScaling& sc = ws.scalings[u];
            auto block = comp.kmat.block(nc + row0, nc + row0, unit.len, unit.len);
            if (unit.kind == ConeKind::Nonneg) block(0, 0) = -sc.w2;
            else block = -sc.omega;
            omega_scale = std::max(omega_scale, block.diagonal().cwiseAbs().maxCoeff());
            row0 += unit.len;
        }
        const double eps = ws.eps_s * std::max(1.0, comp.a_in.lpNorm<Eigen::Infinity>());
        const double dlt = ws.delta_y * omega_scale;
        comp.kmat.diagonal().head(nc).array() += eps;
        comp.kmat.diagonal().tail(mc_in).array() -= dlt;
        bool good = linalg::ldl_factor(comp.kmat);
        // Quasi-definite sign pattern; a flipped pivot means the
        // regularization was too small for this scaling.
        for (int i = 0; good && i < dim; ++i) {
            if ((i < nc) != (comp.kmat(i, i) > 0.0)) good = false;
        }
        if (!good) {
            comp_ok[static_cast<size_t>(c)] = 0;
            continue;
        }

        const int mc_eq = static_cast<int>(comp.eq_rows.size());
        if (mc_eq > 0) {
            MatrixXd rhs = MatrixXd::Zero(dim, mc_eq);
            rhs.topRows(nc) = comp.a_eq.transpose();
            linalg::ldl_solve_in_place(comp.kmat, rhs);
            comp.v_eq = rhs.topRows(nc);
            comp.y_local.noalias() = comp.a_eq * comp.v_eq;
        }
    }
    for (char okc : comp_ok) {
        if (!okc) return false;
    }

    if (ws.m_eq > 0) {
        ws.y_schur.setZero(ws.m_eq, ws.m_eq);
        for (const Component& comp : ws.comps) {
            const int mc = static_cast<int>(comp.eq_rows.size());
            for (int j = 0; j < mc; ++j) {
                for (int i = 0; i < mc; ++i) {
                    ws.y_schur(comp.eq_rows[i], comp.eq_rows[j]) += comp.y_local(i, j);
                }
            }
        }
        const double scale =
            std::max(ws.y_schur.diagonal().cwiseAbs().maxCoeff(), 1e-300);
        ws.y_schur.diagonal().array() += ws.delta_y * scale;
        if (!linalg::cholesky_factor(ws.y_schur, ws.settings.backend)) return false;
    }
    return true;
}

// One application of the factored KKT approximation.
void kkt_solve_once(Workspace& ws, const VectorXd& bx, const VectorXd& by, VectorXd& dx,
                    VectorXd& dy) {
    const int m_eq = ws.m_eq;
    dx.resize(ws.n);
    dy.setZero(ws.m);

    // Phase 1: per-component solve ignoring the equality coupling, to build
    // the Schur right-hand side A_eq S^{-1} btilde - by_eq.
    VectorXd rhs_eq = VectorXd::Zero(m_eq);
    std::vector<VectorXd> local_rhs(ws.comps.size());
    for (size_t c = 0; c < ws.comps.size(); ++c) {
        const Component& comp = ws.comps[c];
        const int nc = static_cast<int>(comp.cols.size());
        const int mc_in = static_cast<int>(comp.in_rows.size());
        VectorXd rhs(nc + mc_in);
        for (int i = 0; i < nc; ++i) rhs[i] = bx[comp.cols[i]];
        for (int i = 0; i < mc_in; ++i) rhs[nc + i] = by[comp.in_rows[i]];
        local_rhs[c] = rhs;
        if (!comp.eq_rows.empty()) {
            Eigen::MatrixXd sol = rhs;
            linalg::ldl_solve_in_place(comp.kmat, sol);
            const VectorXd contrib = comp.a_eq * sol.col(0).head(nc);
            for (int i = 0; i < static_cast<int>(comp.eq_rows.size()); ++i) {
                rhs_eq[comp.eq_rows[i]] += contrib[i];
            }
        }
    }

    VectorXd dy_eq;
    if (m_eq > 0) {
        for (int e = 0; e < m_eq; ++e) rhs_eq[e] -= by[ws.eq_rows[e]];
        Eigen::MatrixXd sol = rhs_eq;
        linalg::cholesky_solve_in_place(ws.y_schur, sol, ws.settings.backend);
        dy_eq = sol.col(0);
        for (int e = 0; e < m_eq; ++e) dy[ws.eq_rows[e]] = dy_eq[e];
    }

    // Phase 2: back-substitute per component with the equality duals folded
    // into the right-hand side; yields dx and the inequality duals together.
    for (size_t c = 0; c < ws.comps.size(); ++c) {
        const Component& comp = ws.comps[c];
        const int nc = static_cast<int>(comp.cols.size());
        Eigen::MatrixXd rhs = local_rhs[c];
        if (!comp.eq_rows.empty()) {
            VectorXd local(comp.eq_rows.size());
            for (int i = 0; i < static_cast<int>(comp.eq_rows.size()); ++i) {
                local[i] = dy_eq[comp.eq_rows[i]];
            }
            rhs.col(0).head(nc) -= comp.a_eq.transpose() * local;
        }
        linalg::ldl_solve_in_place(comp.kmat, rhs);
        for (int i = 0; i < nc; ++i) dx[comp.cols[i]] = rhs(i, 0);
        for (int i = 0; i < static_cast<int>(comp.in_rows.size()); ++i) {
            dy[comp.in_rows[i]] = rhs(nc + i, 0);
        }
    }
}

// Residual of the exact (unregularized) KKT operator.
void kkt_residual(Workspace& ws, const VectorXd& bx, const VectorXd& by, const VectorXd& dx,
                  const VectorXd& dy, VectorXd& rx, VectorXd& ry) {
    rx = bx - ws.at * dy;
    ry = by;
    const VectorXd adx = ws.prob->constraint_matrix * dx;
    ry -= adx;
    // Inequality rows additionally carry -W^2 dy.
    for (int u = 0; u < static_cast<int>(ws.units.size()); ++u) {
        const Unit& unit = ws.units[u];
        const UnitScaling& sc = ws.scalings[u];
        VectorXd seg(unit.len);
        for (int i = 0; i < unit.len; ++i) seg[i] = dy[unit.offset + i];
        if (unit.kind == ConeKind::Nonneg) seg[0] *= sc.w2;
        else seg = (sc.omega * seg).eval();
        for (int i = 0; i < unit.len; ++i) ry[unit.offset + i] += seg[i];
    }
}

void kkt_solve(Workspace& ws, const VectorXd& bx, const VectorXd& by, VectorXd& dx, VectorXd& dy) {
    kkt_solve_once(ws, bx, by, dx, dy);
    const double rhs_norm = std::max(1.0, std::max(bx.lpNorm<Eigen::Infinity>(),
                                                   by.lpNorm<Eigen::Infinity>()));
    VectorXd rx, ry, ex, ey, dx_try, dy_try, rx_try, ry_try;
    kkt_residual(ws, bx, by, dx, dy, rx, ry);
    double rnorm = std::max(rx.lpNorm<Eigen::Infinity>(), ry.lpNorm<Eigen::Infinity>());
    for (int round = 0; round < kRefinementRounds; ++round) {
        if (rnorm <= 1e-13 * rhs_norm) break;
        kkt_solve_once(ws, rx, ry, ex, ey);
        dx_try = dx + ex;
        dy_try = dy + ey;
        kkt_residual(ws, bx, by, dx_try, dy_try, rx_try, ry_try);
        const double rnorm_try =
            std::max(rx_try.lpNorm<Eigen::Infinity>(), ry_try.lpNorm<Eigen::Infinity>());
        if (rnorm_try >= rnorm) break; // correction no longer helps
        dx.swap(dx_try);
        dy.swap(dy_try);
        rx.swap(rx_try);
        ry.swap(ry_try);
        rnorm = rnorm_try;
    }
    if (ws.settings.verbose) {
        std::printf("    kkt solve: rel residual %.2e\n", rnorm / rhs_norm);
    }
}

} // namespace

void ConicProblem::validate() const {
    const int n = num_vars();
    const int m = num_rows();
    if (constraint_matrix.rows() != m || constraint_matrix.cols() != n) {
        throw Error(ErrorCode::ShapeMismatch,
                    "A is " + std::to_string(constraint_matrix.rows()) + "x" +
                        std::to_string(constraint_matrix.cols()) + ", expected " +
                        std::to_string(m) + "x" + std::to_string(n));
    }
    int total = 0;
    for (const auto& blk : cone_spec) {
        if (blk.dim <= 0) throw Error(ErrorCode::ShapeMismatch, "cone block with dim <= 0");
        total += blk.slack_dim();
    }
    if (total != m) {
        throw Error(ErrorCode::ShapeMismatch, "cone dims sum to " + std::to_string(total) +
                                                  ", expected " + std::to_string(m));
    }
    if (!objective.allFinite() || !rhs.allFinite()) {
        throw Error(ErrorCode::ShapeMismatch, "non-finite problem data");
    }
    std::vector<bool> row_nonzero(m, false);
    for (int k = 0; k < constraint_matrix.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(constraint_matrix, k); it; ++it) {
            if (!std::isfinite(it.value())) {
                throw Error(ErrorCode::ShapeMismatch, "non-finite entry in A");
            }
            if (it.value() != 0.0) row_nonzero[it.row()] = true;
        }
    }
    for (int r = 0; r < m; ++r) {
        if (!row_nonzero[r]) {
            throw Error(ErrorCode::ShapeMismatch, "all-zero constraint row " + std::to_string(r));
        }
    }
}

const char* status_name(SolveStatus status) {
    switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::PrimalInfeasible: return "PrimalInfeasible";
    case SolveStatus::DualInfeasible: return "DualInfeasible";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
    }
    return "Unknown";
}

ConicSolution solve(const ConicProblem& problem, const SolverSettings& settings) {
    problem.validate();

    Workspace ws;
    ws.prob = &problem;
    ws.settings = settings;
    build_structure(ws);
    ws.scalings.resize(ws.units.size());

    const VectorXd& c = problem.objective;
    const VectorXd& b = problem.rhs;
    const auto& a_mat = problem.constraint_matrix;
    const double normb = 1.0 + b.norm();
    const double normc = 1.0 + c.norm();

    // Unit initialization: identity point in every cone, tau = kappa = 1.
    VectorXd x = VectorXd::Zero(ws.n);
    VectorXd y = VectorXd::Zero(ws.m);
    VectorXd s = VectorXd::Zero(ws.m);
    for (const Unit& unit : ws.units) {
        const VectorXd e = cone_identity(unit);
        s.segment(unit.offset, unit.len) = e;
        y.segment(unit.offset, unit.len) = e;
    }
    double tau = 1.0, kappa = 1.0;

    ConicSolution sol;
    sol.status = SolveStatus::MaxIterations;

    auto finish = [&](SolveStatus status, int iters) {
        sol.status = status;
        sol.iterations = iters;
        if (status == SolveStatus::PrimalInfeasible) {
            const double scale = -b.dot(y);
            sol.primal = x;
            sol.dual = y / scale;
            sol.slack = s;
            sol.primal_obj = sol.dual_obj = sol.gap = 0.0;
        } else if (status == SolveStatus::DualInfeasible) {
            const double scale = -c.dot(x);
            sol.primal = x / scale;
            sol.dual = y;
            sol.slack = s / scale;
            sol.primal_obj = sol.dual_obj = sol.gap = 0.0;
        } else {
            sol.primal = x / tau;
            sol.dual = y / tau;
            sol.slack = s / tau;
            sol.primal_obj = c.dot(sol.primal);
            sol.dual_obj = -b.dot(sol.dual);
            sol.gap = std::abs(sol.primal_obj - sol.dual_obj) /
                      (1.0 + std::abs(sol.primal_obj));
        }
        return sol;
    };

    VectorXd u1x, u1y, vx, vy, dx, dy, ds(ws.m), rhs_x, rhs_y;
    VectorXd dx_aff, dy_aff, ds_aff;
    double mu_prev = kInf;
    int slow_progress = 0;

    for (int iter = 0; iter < settings.max_iterations; ++iter) {
        const VectorXd r_d = ws.at * y + c * tau;
        VectorXd r_p = a_mat * x + s - b * tau;
        const double cx = c.dot(x);
        const double by = b.dot(y);
        const double r_g = kappa + cx + by;

        const double mu = (s.dot(y) + tau * kappa) / (ws.nu + 1.0);

        // Termination on the de-homogenized candidate.
        const double pobj = cx / tau;
        const double dobj = -by / tau;
        const double pres = r_p.norm() / (tau * normb);
        const double dres = r_d.norm() / (tau * normc);
        const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
        if (settings.verbose) {
            std::printf("iter %3d  mu %9.2e  pres %9.2e  dres %9.2e  gap %9.2e  tau %8.2e\n",
                        iter, mu, pres, dres, relgap, tau);
        }
        if (pres <= settings.feas_tol && dres <= settings.feas_tol &&
            relgap <= settings.rel_gap_tol) {
            return finish(SolveStatus::Optimal, iter);
        }

        // Infeasibility certificates.
        if (tau < kappa * 1e-2) {
            if (by < 0.0) {
                const double quality = (ws.at * y).norm() * normb / (-by);
                if (quality <= settings.feas_tol) return finish(SolveStatus::PrimalInfeasible, iter);
            }
            if (cx < 0.0) {
                const double quality = (a_mat * x + s).norm() * normc / (-cx);
                if (quality <= settings.feas_tol) return finish(SolveStatus::DualInfeasible, iter);
            }
        }

        // Nesterov-Todd scalings.
        for (int u = 0; u < static_cast<int>(ws.units.size()); ++u) {
            if (!update_scaling(ws.units[u], s, y, ws.scalings[u])) {
                return finish(SolveStatus::NumericalFailure, iter);
            }
        }

        ws.eps_s = 1e-13;
        ws.delta_y = 1e-13;
        bool factored = false;
        for (int attempt = 0; attempt < 3 && !factored; ++attempt) {
            factored = factor_kkt(ws);
            if (!factored) {
                ws.eps_s *= 1e3;
                ws.delta_y *= 1e3;
            }
        }
        if (!factored) return finish(SolveStatus::NumericalFailure, iter);

        kkt_solve(ws, -c, b, u1x, u1y);
        const double denom = c.dot(u1x) + b.dot(u1y) - kappa / tau;
        if (!std::isfinite(denom) || std::abs(denom) < 1e-300) {
            return finish(SolveStatus::NumericalFailure, iter);
        }

        // Predictor (affine scaling) direction.
        rhs_x = -r_d;
        rhs_y = -r_p;
        for (const Unit& unit : ws.units) {
            rhs_y.segment(unit.offset, unit.len) += s.segment(unit.offset, unit.len);
        }
        kkt_solve(ws, rhs_x, rhs_y, vx, vy);
        const double dtau_aff = (kappa - r_g - c.dot(vx) - b.dot(vy)) / denom;
        dx_aff = vx + dtau_aff * u1x;
        dy_aff = vy + dtau_aff * u1y;
        // ds = W^T (u - W dy) evaluated in the scaled space, which avoids the
        // cancellation of forming s + W^2 dy directly.
        ds_aff.setZero(ws.m);
        for (int u = 0; u < static_cast<int>(ws.units.size()); ++u) {
            const Unit& unit = ws.units[u];
            const UnitScaling& sc = ws.scalings[u];
            const VectorXd wdy = scale_dual(unit, sc, dy_aff.segment(unit.offset, unit.len));
            const VectorXd lam = lambda_of(unit, sc);
            ds_aff.segment(unit.offset, unit.len) =
                unscale_to_slack(unit, sc, (-lam - wdy).eval());
        }
        const double dkappa_aff = -kappa - (kappa / tau) * dtau_aff;

        double alpha_max = kInf;
        for (int u = 0; u < static_cast<int>(ws.units.size()); ++u) {
            const Unit& unit = ws.units[u];
            alpha_max = std::min(alpha_max,
                                 step_to_boundary(unit, s.segment(unit.offset, unit.len),
                                                  ds_aff.segment(unit.offset, unit.len)));
            alpha_max = std::min(alpha_max,
                                 step_to_boundary(unit, y.segment(unit.offset, unit.len),
                                                  dy_aff.segment(unit.offset, unit.len)));
        }
        if (dtau_aff < 0.0) alpha_max = std::min(alpha_max, -tau / dtau_aff);
        if (dkappa_aff < 0.0) alpha_max = std::min(alpha_max, -kappa / dkappa_aff);
        const double alpha_aff = std::min(1.0, alpha_max);

        double mu_aff = ((s + alpha_aff * ds_aff).dot(y + alpha_aff * dy_aff) +
                         (tau + alpha_aff * dtau_aff) * (kappa + alpha_aff * dkappa_aff)) /
                        (ws.nu + 1.0);
        mu_aff = std::max(mu_aff, 0.0);
        const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

        // Combined (centering + corrector) direction.
        rhs_x = -(1.0 - sigma) * r_d;
        rhs_y = -(1.0 - sigma) * r_p;
        VectorXd u_lambda = VectorXd::Zero(ws.m); // Jordan-division result per unit
        for (int u = 0; u < static_cast<int>(ws.units.size()); ++u) {
            const Unit& unit = ws.units[u];
            const UnitScaling& sc = ws.scalings[u];
            const VectorXd lam = lambda_of(unit, sc);
            const VectorXd scaled_ds =
                scale_primal(unit, sc, ds_aff.segment(unit.offset, unit.len));
            const VectorXd scaled_dy = scale_dual(unit, sc, dy_aff.segment(unit.offset, unit.len));
            VectorXd d_s = -jordan_product(unit, lam, lam) -
                           jordan_product(unit, scaled_ds, scaled_dy) +
                           sigma * mu * cone_identity(unit);
            const VectorXd u_dir = jordan_solve(unit, sc, d_s);
            u_lambda.segment(unit.offset, unit.len) = u_dir;
            rhs_y.segment(unit.offset, unit.len) -= unscale_to_slack(unit, sc, u_dir);
        }
        kkt_solve(ws, rhs_x, rhs_y, vx, vy);
        const double dtau =
            (-(1.0 - sigma) * r_g - c.dot(vx) - b.dot(vy) +
             (tau * kappa + dtau_aff * dkappa_aff - sigma * mu) / tau) /
            denom;
        dx = vx + dtau * u1x;
        dy = vy + dtau * u1y;
        for (int u = 0; u < static_cast<int>(ws.units.size()); ++u) {
            const Unit& unit = ws.units[u];
            const UnitScaling& sc = ws.scalings[u];
            const VectorXd wdy = scale_dual(unit, sc, dy.segment(unit.offset, unit.len));
            ds.segment(unit.offset, unit.len) = unscale_to_slack(
                unit, sc, (u_lambda.segment(unit.offset, unit.len) - wdy).eval());
        }
        const double dkappa =
            (-(tau * kappa + dtau_aff * dkappa_aff) + sigma * mu) / tau - (kappa / tau) * dtau;

        alpha_max = kInf;
        for (int u = 0; u < static_cast<int>(ws.units.size()); ++u) {
            const Unit& unit = ws.units[u];
            alpha_max = std::min(alpha_max,
                                 step_to_boundary(unit, s.segment(unit.offset, unit.len),
                                                  ds.segment(unit.offset, unit.len)));
            alpha_max = std::min(alpha_max,
                                 step_to_boundary(unit, y.segment(unit.offset, unit.len),
                                                  dy.segment(unit.offset, unit.len)));
        }
        if (dtau < 0.0) alpha_max = std::min(alpha_max, -tau / dtau);
        if (dkappa < 0.0) alpha_max = std::min(alpha_max, -kappa / dkappa);
        const double alpha = std::min(1.0, settings.step_fraction * alpha_max);
        if (settings.verbose) {
            std::printf("    sigma %.3e  alpha_aff %.3e  alpha %.3e  dtau %.3e\n", sigma,
                        alpha_aff, alpha, dtau);
        }
        if (!(alpha > 1e-10)) return finish(SolveStatus::NumericalFailure, iter);

        x += alpha * dx;
        y += alpha * dy;
        for (const Unit& unit : ws.units) {
            s.segment(unit.offset, unit.len) += alpha * ds.segment(unit.offset, unit.len);
        }
        tau += alpha * dtau;
        kappa += alpha * dkappa;

        if (mu < mu_prev * 0.999) slow_progress = 0;
        else if (++slow_progress >= 10) return finish(SolveStatus::NumericalFailure, iter);
        mu_prev = mu;
    }
    return finish(SolveStatus::MaxIterations, settings.max_iterations);
}

Residuals residuals(const ConicProblem& problem, const ConicSolution& solution) {
    if (solution.primal.size() != problem.num_vars() ||
        solution.dual.size() != problem.num_rows() ||
        solution.slack.size() != problem.num_rows()) {
        throw Error(ErrorCode::ShapeMismatch, "solution shapes do not match the problem");
    }
    Residuals res;
    const VectorXd primal_viol = problem.constraint_matrix * solution.primal + solution.slack -
                                 problem.rhs;
    res.primal_res = primal_viol.norm() / (1.0 + problem.rhs.norm());
    const VectorXd dual_viol =
        problem.constraint_matrix.transpose() * solution.dual + problem.objective;
    res.dual_res = dual_viol.norm() / (1.0 + problem.objective.norm());
    const double cx = problem.objective.dot(solution.primal);
    const double by = problem.rhs.dot(solution.dual);
    res.gap = std::abs(cx + by) / (1.0 + std::abs(cx));
    return res;
}

} // namespace cola::conic
