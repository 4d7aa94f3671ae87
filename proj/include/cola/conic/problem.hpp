#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <vector>

#include "cola/errors.hpp"
#include "cola/linalg/kernels.hpp"

namespace cola::conic {

enum class ConeKind { Zero, Nonneg, SecondOrder, Psd };

struct ConeBlock {
    ConeKind kind;
    // Slack length for Zero/Nonneg/SecondOrder; matrix order for Psd (the
    // slack then holds the svec of the matrix, sqrt(2)-scaled off-diagonals).
    int dim;

    int slack_dim() const { return kind == ConeKind::Psd ? dim * (dim + 1) / 2 : dim; }
};

// Standard slack form: min c^T x  s.t.  A x + s = b,  s in K.
struct ConicProblem {
    Eigen::VectorXd objective;
    Eigen::SparseMatrix<double> constraint_matrix;
    Eigen::VectorXd rhs;
    std::vector<ConeBlock> cone_spec;

    int num_vars() const { return static_cast<int>(objective.size()); }
    int num_rows() const { return static_cast<int>(rhs.size()); }

    // Throws ShapeMismatch on inconsistent dimensions, non-finite data,
    // or an all-zero constraint row.
    void validate() const;
};

enum class SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
    NumericalFailure,
};

const char* status_name(SolveStatus status);

struct ConicSolution {
    Eigen::VectorXd primal; // x
    Eigen::VectorXd dual;   // y
    Eigen::VectorXd slack;  // s
    SolveStatus status = SolveStatus::NumericalFailure;
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    double gap = 0.0;
    int iterations = 0;
};

struct SolverSettings {
    double rel_gap_tol = 1e-8;
    double feas_tol = 1e-8;
    int max_iterations = 100;
    double step_fraction = 0.99;
    linalg::Backend backend = linalg::default_backend();
    bool verbose = false;
};

} // namespace cola::conic
