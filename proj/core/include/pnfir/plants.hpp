#pragma once

#include <memory>

#include <Eigen/Dense>

#include "pnfir/signal.hpp"

namespace pnfir {

/// Continuous time SISO transfer function, coefficients in ascending powers
/// of s. Must be proper (deg num <= deg den).
struct TransferFunction {
    Eigen::VectorXd num;
    Eigen::VectorXd den;
};

struct StateSpace {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    double d = 0.0;
};

enum class Discretization { zoh, tustin };

/// Controllable canonical realization.
StateSpace to_state_space(const TransferFunction& tf);

/// Exact step invariant (zoh) or bilinear (tustin) discretization.
StateSpace discretize(const StateSpace& ct, double ts, Discretization method);

/// Response from rest. zoh is exact for piecewise constant inputs.
Signal simulate_lti(const TransferFunction& tf, const Signal& u, Discretization method = Discretization::zoh);

/// First order lag 1/(tc s + 1) in cascade with a +-limit saturation.
Signal saturated_lag_response(const Signal& u, double tc = 0.5, double limit = 1.0);

/// Hodgkin-Huxley potassium channel, original sign conventions, time in ms:
///   xdot = alpha(u)(1-x) - beta(u) x,  y = g x^4 (u - reversal),  x(0) = 0.
/// Integrated exactly per sample interval (u is a step between samples).
struct PotassiumParams {
    double conductance = 36.0;
    double reversal = 12.0;
};
double potassium_alpha(double z);
double potassium_beta(double z);
Signal potassium_response(const Signal& u, const PotassiumParams& params = PotassiumParams());

/// LuGre friction with velocity dependent sigma1 so the model is passive.
struct LugreParams {
    double sigma0 = 1e5;
    double sigma2 = 0.4;
    double fc = 1.0;
    double fs = 1.5;
    double vs = 1e-3;
    double c1 = 316.22776601683796;  // sqrt(1e5)
    double c0 = 0.0074;
};
double lugre_g(double v, const LugreParams& p);
double lugre_sigma1(double v, const LugreParams& p);
double lugre_zdot(double v, double z, const LugreParams& p);
/// Bristle force sigma0 z + sigma1(v) zdot + sigma2 v (unit mass scaling).
double lugre_force(double v, double z, const LugreParams& p);
/// One RK4 step of the bristle state with v held constant.
double lugre_step(double z, double v, double dt, const LugreParams& p);
/// Sufficient passivity condition c1 |v| e^{-(v/c0)^2} <= 4 fc, checked on a
/// log spaced grid of |v| plus the analytic maximizer c0/sqrt(2).
bool check_lugre_passivity(const LugreParams& p, int grid = 2000);

enum class FrictionKind { lugre, quadratic_drag, none };

/// Two carts coupled by a spring and damper; control force on cart 2, output
/// its velocity. LuGre friction forces are scaled by 1.5 m_i (parameters are
/// tuned for a unit mass); the quadratic drag variant 0.5 v^2 sign(v) + 0.5 v
/// is not rescaled.
struct TwoCartParams {
    double m1 = 1.0;
    double m2 = 1.0;
    double k12 = 10.0;
    double c12 = 1.0;
    FrictionKind friction = FrictionKind::lugre;
    LugreParams lugre;
    double drag_quad = 0.5;
    double drag_lin = 0.5;
    /// RK4 substeps per sample; the LuGre bristle dynamics are stiff
    /// (rates of order sigma0 |v|), so keep dt below the stability limit.
    int substeps = 8000;
};

/// Sampled plant stepped one input at a time. output() reads the current
/// state before the input of the same instant is applied, so every plant
/// behind this interface is strictly proper.
class DiscretePlant {
public:
    virtual ~DiscretePlant() = default;
    virtual double output() const = 0;
    virtual void advance(double u) = 0;
    virtual void reset() = 0;
    virtual double sample_time() const = 0;
};

/// Throws when the discretization introduces direct feedthrough.
std::unique_ptr<DiscretePlant> make_lti_plant(const TransferFunction& tf, double ts,
                                              Discretization method = Discretization::zoh);
/// y(t+1) = y(t) + ts u(t).
std::unique_ptr<DiscretePlant> make_integrator_plant(double ts);
std::unique_ptr<DiscretePlant> make_two_cart_plant(const TwoCartParams& params, double ts);

/// Batch two cart response from rest (zoh input).
Signal simulate_two_cart(const TwoCartParams& params, const Signal& u);

}  // namespace pnfir
