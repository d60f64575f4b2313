#include "pnfir/passivity.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pnfir {

namespace {

void require_branch_params(int m, int h) {
    if (m < 1) throw std::invalid_argument("filter order m must be >= 1");
    if (h < 1) throw std::invalid_argument("frequency horizon H must be >= 1");
}

}  // namespace

double epsilon_bound(int m, double rho_j, double rho, int h) {
    require_branch_params(m, h);
    if (!(rho > 0)) throw std::invalid_argument("rho must be > 0");
    if (!(rho_j > 0) || rho_j > 1) throw std::invalid_argument("rho_j must be in (0, 1]");
    const double s = (rho_j == 1.0) ? static_cast<double>(m)
                                    : (1.0 - std::pow(rho_j, m)) / (1.0 - rho_j);
    return std::numbers::pi * rho * s * (m - 1) / (2.0 * h);
}

LinearConstraintSet frequency_constraints(const std::vector<Eigen::Index>& tap_offsets, int m, int h,
                                          const Eigen::VectorXd& eps, Eigen::Index num_vars) {
    require_branch_params(m, h);
    if (eps.size() != static_cast<Eigen::Index>(tap_offsets.size())) {
        throw std::invalid_argument("frequency_constraints: one epsilon per branch required");
    }
    auto coeffs = std::make_shared<Eigen::MatrixXd>(h + 1, m);
    for (int row = 0; row <= h; ++row) {
        for (int k = 0; k < m; ++k) {
            (*coeffs)(row, k) = 2.0 * std::cos(std::numbers::pi * row * k / h);
        }
    }
    LinearConstraintSet set(num_vars);
    for (std::size_t j = 0; j < tap_offsets.size(); ++j) {
        LinearConstraintSet::Block block;
        block.col_start = tap_offsets[j];
        block.coeffs = coeffs;
        block.lower = Eigen::VectorXd::Constant(h + 1, eps[static_cast<Eigen::Index>(j)]);
        block.upper = Eigen::VectorXd::Constant(h + 1, kInf);
        set.add_block(std::move(block));
    }
    return set;
}

LinearConstraintSet decay_bounds(const std::vector<Eigen::Index>& tap_offsets, int m, double rho,
                                 const Eigen::VectorXd& rho_decay, Eigen::Index num_vars) {
    if (m < 1) throw std::invalid_argument("filter order m must be >= 1");
    if (!(rho > 0)) throw std::invalid_argument("rho must be > 0");
    if (rho_decay.size() != static_cast<Eigen::Index>(tap_offsets.size())) {
        throw std::invalid_argument("decay_bounds: one decay rate per branch required");
    }
    LinearConstraintSet set(num_vars);
    for (std::size_t j = 0; j < tap_offsets.size(); ++j) {
        const double rj = rho_decay[static_cast<Eigen::Index>(j)];
        if (!(rj > 0) || rj > 1) throw std::invalid_argument("decay_bounds: rho_j must be in (0, 1]");
        double mag = rho;
        for (int k = 0; k < m; ++k) {
            set.add_bound(tap_offsets[j] + k, -mag, mag);
            mag *= rj;
        }
    }
    return set;
}

double verify_frequency_margin(const Eigen::VectorXd& taps, int grid_points) {
    const FrequencyResponse fr = frequency_response(taps, grid_points);
    return 2.0 * fr.re.minCoeff();
}

FrequencyResponse frequency_response(const Eigen::VectorXd& taps, int grid_points) {
    if (taps.size() < 1) throw std::invalid_argument("frequency response of empty filter");
    if (grid_points < 2) throw std::invalid_argument("frequency grid needs at least 2 points");
    FrequencyResponse fr;
    fr.omega.resize(grid_points);
    fr.re.resize(grid_points);
    fr.im.resize(grid_points);
    const Eigen::Index m = taps.size();
    for (int i = 0; i < grid_points; ++i) {
        const double w = std::numbers::pi * i / (grid_points - 1);
        // e^{-jwk} by recurrence; rotation error ~ m * machine eps stays far
        // below the verification tolerances.
        const double cw = std::cos(w), sw = std::sin(w);
        double cr = 1.0, ci = 0.0;
        double re = 0.0, im = 0.0;
        for (Eigen::Index k = 0; k < m; ++k) {
            re += taps[k] * cr;
            im -= taps[k] * ci;
            const double nr = cr * cw - ci * sw;
            ci = cr * sw + ci * cw;
            cr = nr;
        }
        fr.omega[i] = w;
        fr.re[i] = re;
        fr.im[i] = im;
    }
    return fr;
}

double toeplitz_min_eig(const Eigen::VectorXd& taps, int n) {
    if (n < 2 || n > 512) throw std::invalid_argument("toeplitz_min_eig: n must be in [2, 512]");
    if (taps.size() < 1) throw std::invalid_argument("toeplitz_min_eig: empty filter");
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int lag = std::abs(i - j);
            if (lag < taps.size()) t(i, j) = taps[lag];
        }
        t(i, i) = 2.0 * taps[0];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

namespace {

// min over tau of <P_tau u, P_tau y>: every prefix must absorb energy, not
// just the full horizon.
double min_prefix_supply(const Signal& u, const Signal& y) {
    double acc = 0.0;
    double worst = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < u.size(); ++t) {
        acc += u.samples[t] * y.samples[t];
        worst = std::min(worst, acc);
    }
    return worst;
}

}  // namespace

double empirical_supply_rate(const NfirOperator& op, const Signal& u) {
    return min_prefix_supply(u, nfir_apply(op, u));
}

double empirical_supply_rate(const NfirOperator& op, const Signal& u, const Signal& q) {
    return min_prefix_supply(u, nfir_apply_external(op, u, q));
}

}  // namespace pnfir
