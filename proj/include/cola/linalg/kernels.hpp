#pragma once

#include <Eigen/Dense>

namespace cola::linalg {

// Dense kernels come in two flavors: a plain serial reference and a tiled
// OpenMP version. Both produce results that are independent of the thread
// count (every output element is accumulated by exactly one thread in a fixed
// order), so a solve is reproducible for a given backend.
enum class Backend {
    Serial,
    OpenMp,
};

Backend default_backend();

// In-place lower Cholesky factorization A = L*L^T of a symmetric positive
// definite matrix (only the lower triangle of `a` is referenced; on return the
// lower triangle holds L). Returns false on a non-positive pivot.
bool cholesky_factor(Eigen::Ref<Eigen::MatrixXd> a, Backend backend);

// Solves L*L^T x = b in place for one or more right-hand sides, given the
// factor produced by cholesky_factor.
void cholesky_solve_in_place(const Eigen::MatrixXd& l, Eigen::Ref<Eigen::MatrixXd> b,
                             Backend backend);

// Symmetric product accumulation: y += a * a^T restricted to the lower
// triangle (the upper triangle of y is left untouched).
void syrk_lower_accumulate(const Eigen::MatrixXd& a, Eigen::Ref<Eigen::MatrixXd> y,
                           Backend backend);

// Unpivoted LDL^T factorization for symmetric quasi-definite matrices (the
// per-component interior-point blocks; these are small, so only a serial
// path exists). On return the strict lower triangle holds L (unit diagonal
// implied) and the diagonal holds D. Fails on a vanishing pivot.
bool ldl_factor(Eigen::Ref<Eigen::MatrixXd> a);

// Solves (L D L^T) x = b in place for one or more right-hand sides.
void ldl_solve_in_place(const Eigen::MatrixXd& ldl, Eigen::Ref<Eigen::MatrixXd> b);

} // namespace cola::linalg
