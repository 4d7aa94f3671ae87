#include "cola/linalg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#ifdef COLA_HAVE_OPENMP
#include <omp.h>
#endif

namespace cola::linalg {

namespace {

constexpr int kBlock = 96;

// Unblocked left-looking factorization of a small dense block.
bool factor_unblocked(Eigen::Ref<Eigen::MatrixXd> a) {
    const int n = static_cast<int>(a.rows());
    for (int j = 0; j < n; ++j) {
        double d = a(j, j);
        for (int t = 0; t < j; ++t) d -= a(j, t) * a(j, t);
        if (!(d > 0.0)) return false;
        const double ljj = std::sqrt(d);
        a(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double v = a(i, j);
            for (int t = 0; t < j; ++t) v -= a(i, t) * a(j, t);
            a(i, j) = v / ljj;
        }
    }
    return true;
}

// Rows of `panel` become panel * L^{-T} for the already-factored diagonal
// block L (lower triangular).
void trsm_right_lower_transpose(const Eigen::Ref<const Eigen::MatrixXd>& l,
                                Eigen::Ref<Eigen::MatrixXd> panel) {
    const int nb = static_cast<int>(l.rows());
    for (int j = 0; j < nb; ++j) {
        for (int t = 0; t < j; ++t) panel.col(j).noalias() -= l(j, t) * panel.col(t);
        panel.col(j) /= l(j, j);
    }
}

bool factor_serial(Eigen::Ref<Eigen::MatrixXd> a) { return factor_unblocked(a); }

bool factor_openmp(Eigen::Ref<Eigen::MatrixXd> a) {
    const int n = static_cast<int>(a.rows());
    for (int k = 0; k < n; k += kBlock) {
        const int kb = std::min(kBlock, n - k);
        if (!factor_unblocked(a.block(k, k, kb, kb))) return false;
        const int rest = n - k - kb;
        if (rest == 0) break;
        trsm_right_lower_transpose(a.block(k, k, kb, kb), a.block(k + kb, k, rest, kb));

        // Trailing update: each lower tile is owned by one loop index, so the
        // accumulation order per element is fixed.
        const auto panel = a.block(k + kb, k, rest, kb);
        const int tiles = (rest + kBlock - 1) / kBlock;
        const int npairs = tiles * (tiles + 1) / 2;
#ifdef COLA_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (int pair = 0; pair < npairs; ++pair) {
            // Map the flat index to a lower-triangular tile (ti >= tj).
            int tj = 0, off = pair;
            while (off >= tiles - tj) {
                off -= tiles - tj;
                ++tj;
            }
            const int ti = tj + off;
            const int i0 = ti * kBlock, j0 = tj * kBlock;
            const int ib = std::min(kBlock, rest - i0), jb = std::min(kBlock, rest - j0);
            a.block(k + kb + i0, k + kb + j0, ib, jb).noalias() -=
                panel.middleRows(i0, ib) * panel.middleRows(j0, jb).transpose();
        }
    }
    return true;
}

} // namespace

Backend default_backend() {
#ifdef COLA_HAVE_OPENMP
    return Backend::OpenMp;
#else
    return Backend::Serial;
#endif
}

bool cholesky_factor(Eigen::Ref<Eigen::MatrixXd> a, Backend backend) {
    if (a.rows() != a.cols()) return false;
    if (backend == Backend::OpenMp && a.rows() > kBlock) return factor_openmp(a);
    return factor_serial(a);
}

void cholesky_solve_in_place(const Eigen::MatrixXd& l, Eigen::Ref<Eigen::MatrixXd> b,
                             Backend backend) {
    const int nrhs = static_cast<int>(b.cols());
    auto solve_col = [&](int c) {
        auto col = b.col(c);
        l.triangularView<Eigen::Lower>().solveInPlace(col);
        l.triangularView<Eigen::Lower>().transpose().solveInPlace(col);
    };
    if (backend == Backend::OpenMp && nrhs > 1) {
#ifdef COLA_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int c = 0; c < nrhs; ++c) solve_col(c);
    } else {
        for (int c = 0; c < nrhs; ++c) solve_col(c);
    }
}

bool ldl_factor(Eigen::Ref<Eigen::MatrixXd> a) {
    const int n = static_cast<int>(a.rows());
    Eigen::VectorXd w(n);
    for (int j = 0; j < n; ++j) {
        for (int t = 0; t < j; ++t) w[t] = a(j, t) * a(t, t);
        a.col(j).tail(n - j).noalias() -= a.bottomLeftCorner(n - j, j) * w.head(j);
        const double d = a(j, j);
        if (!(std::abs(d) > 1e-300)) return false;
        if (j + 1 < n) a.col(j).tail(n - j - 1) /= d;
    }
    return true;
}

void ldl_solve_in_place(const Eigen::MatrixXd& ldl, Eigen::Ref<Eigen::MatrixXd> b) {
    ldl.triangularView<Eigen::UnitLower>().solveInPlace(b);
    b.array().colwise() /= ldl.diagonal().array();
    ldl.triangularView<Eigen::UnitLower>().transpose().solveInPlace(b);
}

void syrk_lower_accumulate(const Eigen::MatrixXd& a, Eigen::Ref<Eigen::MatrixXd> y,
                           Backend backend) {
    const int n = static_cast<int>(a.rows());
    if (backend == Backend::Serial || n <= kBlock) {
        for (int j = 0; j < n; ++j)
            y.col(j).tail(n - j).noalias() += a.bottomRows(n - j) * a.row(j).transpose();
        return;
    }
    const int tiles = (n + kBlock - 1) / kBlock;
    const int npairs = tiles * (tiles + 1) / 2;
#ifdef COLA_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int pair = 0; pair < npairs; ++pair) {
        int tj = 0, off = pair;
        while (off >= tiles - tj) {
            off -= tiles - tj;
            ++tj;
        }
        const int ti = tj + off;
        const int i0 = ti * kBlock, j0 = tj * kBlock;
        const int ib = std::min(kBlock, n - i0), jb = std::min(kBlock, n - j0);
        if (ti == tj) {
            const Eigen::MatrixXd tile =
                a.middleRows(i0, ib) * a.middleRows(j0, jb).transpose();
            y.block(i0, j0, ib, jb).triangularView<Eigen::Lower>() += tile;
        } else {
            y.block(i0, j0, ib, jb).noalias() +=
                a.middleRows(i0, ib) * a.middleRows(j0, jb).transpose();
        }
    }
}

} // namespace cola::linalg
