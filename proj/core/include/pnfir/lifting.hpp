#pragma once

#include <variant>

#include <Eigen/Dense>

namespace pnfir {

/// Constant lifting f = 1. The branch degenerates to a plain FIR filter.
struct IdentityLifting {};

/// Radial gate on a scalar window: 1 inside |z-center| < radius, then decays
/// as radius/|z-center|.
struct VolcanoLifting {
    double center = 0.0;
    double radius = 1.0;
};

/// Gaussian kernel on a length-R input window: exp(-|z-reference|^2/(2 sigma)).
struct GaussianWindowLifting {
    Eigen::VectorXd reference;
    double sigma = 1.0;
};

/// Gaussian kernel on the external signal only: exp(-|q-setpoint|^2/(2 sigma)).
/// Branch activation is scheduled by q and does not depend on u.
struct ExternalGaussianLifting {
    double setpoint = 0.0;
    double sigma = 1.0;
};

/// Piecewise linear table on a scalar window, clamped outside the knot range.
/// Escape hatch for lifting shapes not covered by the named kinds.
struct TabulatedLifting {
    Eigen::VectorXd knots;
    Eigen::VectorXd values;
};

using LiftingFunction = std::variant<IdentityLifting, VolcanoLifting, GaussianWindowLifting,
                                     ExternalGaussianLifting, TabulatedLifting>;

/// Input window length R1 consumed from u.
Eigen::Index input_window(const LiftingFunction& f);

/// External window length R2 consumed from q (0 when the lifting ignores q).
Eigen::Index external_window(const LiftingFunction& f);

/// Throws std::invalid_argument when parameters are out of range.
void validate_lifting(const LiftingFunction& f);

/// Evaluates the lifting on dense windows (oldest sample first). q_window is
/// only read when external_window(f) > 0.
double lifting_eval(const LiftingFunction& f, const Eigen::VectorXd& u_window,
                    const Eigen::VectorXd& q_window = Eigen::VectorXd());

}  // namespace pnfir
