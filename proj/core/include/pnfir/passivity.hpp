#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pnfir/constraints.hpp"
#include "pnfir/nfir.hpp"
#include "pnfir/signal.hpp"

namespace pnfir {

/// Passivity constraint hyperparameters for training. rho_decay holds one
/// decay rate per branch; epsilon_override, when present, replaces the
/// analytic epsilon_bound branch by branch.
struct PassivityConfig {
    int h = 200;
    double rho = 100.0;
    Eigen::VectorXd rho_decay;
    std::optional<Eigen::VectorXd> epsilon_override;
};

/// Analytic inter-sample safety margin
///   eps = pi rho S (m-1) / (2H),  S = (1-rho_j^m)/(1-rho_j), S = m at rho_j = 1.
/// Guarantees Re G(e^{jw}) >= 0 between frequency samples for taps obeying
/// the decay bounds.
double epsilon_bound(int m, double rho_j, double rho, int h);

/// Frequency sampling rows, h = 0..H per branch:
///   sum_k 2 cos(h pi k / H) g_j(k) >= eps_j.
/// One (H+1) x m coefficient matrix is shared across all branch blocks.
/// tap_offsets locates each branch's taps in the decision vector.
LinearConstraintSet frequency_constraints(const std::vector<Eigen::Index>& tap_offsets, int m, int h,
                                          const Eigen::VectorXd& eps, Eigen::Index num_vars);

/// Tap magnitude bounds -rho rho_j^k <= g_j(k) <= rho rho_j^k.
LinearConstraintSet decay_bounds(const std::vector<Eigen::Index>& tap_offsets, int m, double rho,
                                 const Eigen::VectorXd& rho_decay, Eigen::Index num_vars);

/// min over w in [0, pi] (uniform grid, endpoints included) of
/// 2 sum_k g(k) cos(w k). Nonnegative iff the FIR filter is passive up to
/// grid resolution; callers default the grid to 20 H.
double verify_frequency_margin(const Eigen::VectorXd& taps, int grid_points);

/// Real and imaginary part of G(e^{jw}) = sum_k g(k) e^{-jwk} on a uniform
/// grid over [0, pi], for Nyquist dumps.
struct FrequencyResponse {
    Eigen::VectorXd omega;
    Eigen::VectorXd re;
    Eigen::VectorXd im;
};
FrequencyResponse frequency_response(const Eigen::VectorXd& taps, int grid_points);

/// Smallest eigenvalue of T_n = Gamma_n + Gamma_n^T, the order-n truncation
/// of the operator passivity matrix (T(i,j) = g(|i-j|), doubled diagonal).
/// n is clamped to the spec range [2, 512] by validation, not silently.
double toeplitz_min_eig(const Eigen::VectorXd& taps, int n);

/// min over truncation times tau of <P_tau u, P_tau y> for y = op(u).
/// Nonnegative for every input iff the sampled operator is passive.
double empirical_supply_rate(const NfirOperator& op, const Signal& u);
double empirical_supply_rate(const NfirOperator& op, const Signal& u, const Signal& q);

}  // namespace pnfir
