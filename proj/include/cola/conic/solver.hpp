#pragma once

#include "cola/conic/problem.hpp"

namespace cola::conic {

// Primal-dual interior-point solve of the homogeneous self-dual embedding,
// with Nesterov-Todd scaling on the symmetric cones and Mehrotra
// predictor-corrector steps. Infeasible problems terminate with the
// corresponding certificate in `primal`/`dual`.
ConicSolution solve(const ConicProblem& problem, const SolverSettings& settings = {});

struct Residuals {
    double primal_res = 0.0; // ||Ax + s - b|| / (1 + ||b||)
    double dual_res = 0.0;   // ||A^T y + c|| / (1 + ||c||)
    double gap = 0.0;        // |c^T x + b^T y| / (1 + |c^T x|)
};

Residuals residuals(const ConicProblem& problem, const ConicSolution& solution);

} // namespace cola::conic
