#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cola/conic/problem.hpp"
#include "cola/conjunction.hpp"
#include "cola/state.hpp"

namespace cola {

// Index map between the per-knot moment matrices and the flat decision
// vector handed to the conic solver. Block k (k < N-1) is the order-10
// moment matrix of z_k = (1, dx_k, u_k); the terminal block has order 7
// (z_N = (1, dx_N)). Every block is stored as its lower-triangle svec with
// sqrt(2)-scaled off-diagonals, so inner products against svec'd symmetric
// coefficient matrices equal matrix traces.
struct MomentLayout {
    static constexpr int state_dim = 6;
    static constexpr int control_dim = 3;

    int n_knots = 0;
    std::vector<int> block_dims;    // moment-matrix orders: 10, ..., 10, 7
    std::vector<int> block_offsets; // flat offsets of each block's svec
    int flat_dim = 0;               // svec coordinates (excludes epigraph)
    int epigraph_index = -1;        // contingency penalty scalar, -1 if absent

    int block_order(int k) const { return block_dims[static_cast<size_t>(k)]; }
    int block_offset(int k) const { return block_offsets[static_cast<size_t>(k)]; }
    int block_len(int k) const;

    // Flat index of moment entry (i, j) of block k (order as stored).
    int flat_index(int k, int i, int j) const;

    // Selector maps on a flat vector (scaled planner units).
    Eigen::MatrixXd moment_matrix(const Eigen::VectorXd& flat, int k) const;
    Vec6 l_x(const Eigen::VectorXd& flat, int k) const;
    Mat6 l_xx(const Eigen::VectorXd& flat, int k) const;
    Vec3 l_u(const Eigen::VectorXd& flat, int k) const;
    Mat3 l_uu(const Eigen::VectorXd& flat, int k) const;
    Mat63 l_xu(const Eigen::VectorXd& flat, int k) const;

    // Assembles the flat vector whose blocks are z_k z_k^T for the given
    // stacked vectors (used by tests to validate the constraint assembly).
    Eigen::VectorXd flat_from_stacks(const std::vector<Eigen::VectorXd>& z) const;
};

// Unit scaling used inside the conic problem: positions in km, velocities in
// m/s, control accelerations in mm/s^2.
struct ScalingSpec {
    double position_scale = 1e3;  // m per internal position unit
    double velocity_scale = 1.0;  // m/s per internal velocity unit
    double control_scale = 1e-3;  // m/s^2 per internal control unit

    Vec6 state_scale() const {
        Vec6 d;
        d << position_scale, position_scale, position_scale, velocity_scale, velocity_scale,
            velocity_scale;
        return d;
    }
};

enum class PlannerMode { Standard, Contingency };

struct PlannerSpec {
    LinearModel model;
    ConjunctionGeometry geometry;
    Vec6 initial_delta_state = Vec6::Zero(); // SI, relative to the first knot
    double control_upper_bound = 1.5e-4;     // m/s^2
    std::optional<double> control_lower_bound;
    PlannerMode mode = PlannerMode::Standard;
    double penalty_weight = 10.0; // alpha, Contingency mode only
    ScalingSpec scaling;
};

struct TightnessReport {
    std::vector<double> per_block_eigenvalue_ratio; // lambda1/lambda2, capped at 1e16
    double min_ratio = 0.0;
    bool certified = false; // min_ratio >= 1e4
};

struct ManeuverPlan {
    std::vector<Vec3> controls;     // N-1 accelerations, m/s^2
    std::vector<Vec6> delta_states; // N error states, SI
    double objective = 0.0;         // sum of tr(L_uu), de-scaled to (m/s^2)^2
    TightnessReport tightness;
    PocEstimate achieved; // at dx_N under the linear model
    double terminal_gap = 0.0; // mahalanobis_sq - threshold
    conic::SolveStatus solver_status = conic::SolveStatus::NumericalFailure;
    double solver_gap = 0.0;
    int solver_iterations = 0;
};

// Terminal PoC constraint data shared by the SDP assembly and the half-plane
// baseline: the affine map from the scaled terminal error state to b-plane
// meters, phi * dx_scaled + offset, and the quadratic form constant.
struct TerminalPocData {
    Mat26 phi;          // scaled state -> b-plane meters
    Vec2 offset;        // projector * (ref_N - secondary) position, m
    Mat2 cov_inverse;   // C^{-1}
    double constant;    // offset^T C^{-1} offset  (= tr(C^{-1} b))
};

TerminalPocData terminal_poc_data(const PlannerSpec& spec);

// Shor relaxation of  min x^T Q x + d^T x  s.t.  x^T A x = b  over the
// moment matrix of (1, x).
conic::ConicProblem shor_relax_generic(const Eigen::MatrixXd& q, const Eigen::VectorXd& d,
                                       const Eigen::MatrixXd& a, double b);

// Recovers the minimizer candidate from a solved generic relaxation.
struct ShorSolution {
    double optimum = 0.0;
    Eigen::VectorXd x;
    double eigenvalue_ratio = 0.0;
    bool certified = false;
    conic::SolveStatus status;
};
ShorSolution shor_extract_generic(const conic::ConicSolution& solution, int n_vars);

// Full planner SDP in scaled units, plus the layout describing it.
std::pair<conic::ConicProblem, MomentLayout> build_sdp(const PlannerSpec& spec);

// Eigenvalue extraction, tightness certification and de-scaling.
ManeuverPlan extract_solution(const conic::ConicSolution& solution, const MomentLayout& layout,
                              const PlannerSpec& spec);

} // namespace cola
