#pragma once

#include <filesystem>
#include <optional>

#include <Eigen/Dense>

#include "pnfir/constraints.hpp"

namespace pnfir {

/// Constrained least squares
///   minimize ||A x - b||^2 + sum_i ridge_i x_i^2
///   subject to l <= C x <= u
/// with A the regressor, b the target and C a structured constraint set.
struct QuadraticProgram {
    Eigen::MatrixXd regressor;
    Eigen::VectorXd target;
    Eigen::VectorXd ridge;
    LinearConstraintSet constraints;

    Eigen::Index num_vars() const { return regressor.cols(); }
};

enum class SolveStatus { optimal, max_iter, infeasible };

struct SolverOptions {
    double tol = 1e-8;
    int max_iter = 200000;
    bool polish = true;
    bool scaling = true;
    double admm_rho = 0.1;
    double sigma = 1e-6;
    double over_relaxation = 1.6;
    int check_every = 25;
    /// When set, the problem is dumped here if the solve does not reach
    /// optimal, for offline inspection.
    std::optional<std::filesystem::path> dump_on_failure;
};

struct SolverReport {
    Eigen::VectorXd solution;
    Eigen::VectorXd dual;
    SolveStatus status = SolveStatus::optimal;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
    bool polished = false;
    bool min_norm = false;
    double wall_time_s = 0.0;
};

/// ADMM with Ruiz equilibration and active set polish. Deterministic: same
/// problem and options give the bit-identical iterate path on one build.
SolverReport solve(const QuadraticProgram& qp, const SolverOptions& opts = SolverOptions());

/// Normal equations via LLT; falls back to a complete orthogonal
/// decomposition returning the minimum norm solution (min_norm flag set)
/// when the regressor is rank deficient and no ridge fills the gap.
SolverReport solve_unconstrained(const QuadraticProgram& qp);

/// Writes the problem in a plain text form for debugging failed solves.
void dump_problem(const QuadraticProgram& qp, const std::filesystem::path& file);

}  // namespace pnfir
