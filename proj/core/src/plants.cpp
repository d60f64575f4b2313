#include "pnfir/plants.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace pnfir {

namespace {

Eigen::VectorXd trim_high_zeros(const Eigen::VectorXd& c) {
    Eigen::Index n = c.size();
    while (n > 1 && c[n - 1] == 0.0) --n;
    return c.head(n);
}

struct DiscreteSim {
    StateSpace ss;
    Eigen::VectorXd x;

    explicit DiscreteSim(StateSpace d) : ss(std::move(d)), x(Eigen::VectorXd::Zero(ss.a.rows())) {}

    double step(double u) {
        const double y = (x.size() ? ss.c.dot(x) : 0.0) + ss.d * u;
        if (x.size()) x = ss.a * x + ss.b * u;
        return y;
    }
};

}  // namespace

StateSpace to_state_space(const TransferFunction& tf) {
    const Eigen::VectorXd den = trim_high_zeros(tf.den);
    const Eigen::VectorXd num = trim_high_zeros(tf.num);
    if (den.size() < 1 || den[den.size() - 1] == 0.0) {
        throw std::invalid_argument("transfer function: empty or degenerate denominator");
    }
    if (num.size() > den.size()) {
        throw std::invalid_argument("transfer function: improper (deg num > deg den)");
    }
    const Eigen::Index n = den.size() - 1;
    const double lead = den[n];
    Eigen::VectorXd a = den.head(n) / lead;              // monic low-order coefficients
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
    b.head(num.size()) = num / lead;

    StateSpace ss;
    ss.a = Eigen::MatrixXd::Zero(n, n);
    ss.b = Eigen::VectorXd::Zero(n);
    ss.c = Eigen::VectorXd::Zero(n);
    ss.d = b[n];
    if (n > 0) {
        ss.a.bottomRows(1) = -a.transpose();
        ss.a.topRightCorner(n - 1, n - 1).setIdentity();
        ss.b[n - 1] = 1.0;
        for (Eigen::Index i = 0; i < n; ++i) ss.c[i] = b[i] - b[n] * a[i];
    }
    return ss;
}

StateSpace discretize(const StateSpace& ct, double ts, Discretization method) {
    if (!(ts > 0)) throw std::invalid_argument("discretize: sample time must be > 0");
    const Eigen::Index n = ct.a.rows();
    StateSpace d;
    if (n == 0) {
        d = ct;
        return d;
    }
    if (method == Discretization::zoh) {
        Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
        aug.topLeftCorner(n, n) = ct.a * ts;
        aug.topRightCorner(n, 1) = ct.b * ts;
        const Eigen::MatrixXd e = aug.exp();
        d.a = e.topLeftCorner(n, n);
        d.b = e.topRightCorner(n, 1);
        d.c = ct.c;
        d.d = ct.d;
    } else {
        const Eigen::MatrixXd minv =
            (Eigen::MatrixXd::Identity(n, n) - ct.a * (ts / 2.0)).partialPivLu().inverse();
        d.a = minv * (Eigen::MatrixXd::Identity(n, n) + ct.a * (ts / 2.0));
        d.b = minv * ct.b * ts;
        d.c = minv.transpose() * ct.c;
        d.d = ct.d + ct.c.dot(minv * ct.b) * (ts / 2.0);
    }
    return d;
}

Signal simulate_lti(const TransferFunction& tf, const Signal& u, Discretization method) {
    DiscreteSim sim(discretize(to_state_space(tf), u.ts, method));
    Eigen::VectorXd y(u.size());
    for (Eigen::Index t = 0; t < u.size(); ++t) y[t] = sim.step(u.samples[t]);
    return Signal(std::move(y), u.ts);
}

Signal saturated_lag_response(const Signal& u, double tc, double limit) {
    if (!(tc > 0)) throw std::invalid_argument("saturated lag: time constant must be > 0");
    if (!(limit > 0)) throw std::invalid_argument("saturated lag: limit must be > 0");
    const double a = std::exp(-u.ts / tc);
    Eigen::VectorXd y(u.size());
    double state = 0.0;
    for (Eigen::Index t = 0; t < u.size(); ++t) {
        y[t] = std::clamp(state, -limit, limit);
        state = a * state + (1.0 - a) * u.samples[t];
    }
    return Signal(std::move(y), u.ts);
}

double potassium_alpha(double z) {
    const double w = z + 10.0;
    if (std::abs(w) < 1e-7) return 0.1;  // removable singularity at z = -10
    return 0.01 * w / (std::exp(w / 10.0) - 1.0);
}

double potassium_beta(double z) {
    return 0.125 * std::exp(z / 80.0);
}

Signal potassium_response(const Signal& u, const PotassiumParams& params) {
    Eigen::VectorXd y(u.size());
    double x = 0.0;
    for (Eigen::Index t = 0; t < u.size(); ++t) {
        const double v = u.samples[t];
        y[t] = params.conductance * x * x * x * x * (v - params.reversal);
        const double a = potassium_alpha(v);
        const double b = potassium_beta(v);
        const double rate = a + b;
        const double xss = a / rate;
        x = xss + (x - xss) * std::exp(-rate * u.ts);
    }
    return Signal(std::move(y), u.ts);
}

double lugre_g(double v, const LugreParams& p) {
    const double r = v / p.vs;
    return (p.fc + (p.fs - p.fc) * std::exp(-r * r)) / p.sigma0;
}

double lugre_sigma1(double v, const LugreParams& p) {
    const double r = v / p.c0;
    return p.c1 * std::exp(-r * r);
}

double lugre_zdot(double v, double z, const LugreParams& p) {
    return v - std::abs(v) / lugre_g(v, p) * z;
}

double lugre_force(double v, double z, const LugreParams& p) {
    return p.sigma0 * z + lugre_sigma1(v, p) * lugre_zdot(v, z, p) + p.sigma2 * v;
}

double lugre_step(double z, double v, double dt, const LugreParams& p) {
    const double k1 = lugre_zdot(v, z, p);
    const double k2 = lugre_zdot(v, z + 0.5 * dt * k1, p);
    const double k3 = lugre_zdot(v, z + 0.5 * dt * k2, p);
    const double k4 = lugre_zdot(v, z + dt * k3, p);
    return z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

bool check_lugre_passivity(const LugreParams& p, int grid) {
    if (grid < 2) throw std::invalid_argument("check_lugre_passivity: grid too small");
    const double lo = std::log(1e-6), hi = std::log(1e3);
    const auto excess = [&](double v) { return p.c1 * v * std::exp(-(v / p.c0) * (v / p.c0)) - 4.0 * p.fc; };
    double worst = excess(p.c0 / std::sqrt(2.0));
    for (int i = 0; i < grid; ++i) {
        const double v = std::exp(lo + (hi - lo) * i / (grid - 1));
        worst = std::max(worst, excess(v));
    }
    return worst <= 0.0;
}

namespace {

class LtiPlant final : public DiscretePlant {
public:
    LtiPlant(StateSpace d, double ts) : sim_(std::move(d)), ts_(ts) {}

    double output() const override { return sim_.x.size() ? sim_.ss.c.dot(sim_.x) : 0.0; }
    void advance(double u) override {
        if (sim_.x.size()) sim_.x = sim_.ss.a * sim_.x + sim_.ss.b * u;
    }
    void reset() override { sim_.x.setZero(); }
    double sample_time() const override { return ts_; }

private:
    DiscreteSim sim_;
    double ts_;
};

class IntegratorPlant final : public DiscretePlant {
public:
    explicit IntegratorPlant(double ts) : ts_(ts) {}
    double output() const override { return y_; }
    void advance(double u) override { y_ += ts_ * u; }
    void reset() override { y_ = 0.0; }
    double sample_time() const override { return ts_; }

private:
    double ts_;
    double y_ = 0.0;
};

class TwoCartPlant final : public DiscretePlant {
public:
    TwoCartPlant(TwoCartParams params, double ts) : p_(params), ts_(ts) {
        if (p_.substeps < 1) throw std::invalid_argument("two cart plant: substeps must be >= 1");
        reset();
    }

    double output() const override { return x_[1]; }

    void advance(double u) override {
        const double dt = ts_ / p_.substeps;
        for (int i = 0; i < p_.substeps; ++i) {
            const State k1 = deriv(x_, u);
            const State k2 = deriv(add(x_, k1, 0.5 * dt), u);
            const State k3 = deriv(add(x_, k2, 0.5 * dt), u);
            const State k4 = deriv(add(x_, k3, dt), u);
            for (int j = 0; j < 5; ++j) {
                x_[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
    }

    void reset() override { x_ = {0, 0, 0, 0, 0}; }
    double sample_time() const override { return ts_; }

private:
    using State = std::array<double, 5>;  // v1 v2 s z1 z2

    static State add(const State& x, const State& k, double h) {
        State out;
        for (int j = 0; j < 5; ++j) out[j] = x[j] + h * k[j];
        return out;
    }

    double friction(double v, double z, double& zdot, double mass) const {
        switch (p_.friction) {
            case FrictionKind::lugre:
                zdot = lugre_zdot(v, z, p_.lugre);
                return 1.5 * mass * lugre_force(v, z, p_.lugre);
            case FrictionKind::quadratic_drag:
                zdot = 0.0;
                return p_.drag_quad * v * std::abs(v) + p_.drag_lin * v;
            case FrictionKind::none:
            default:
                zdot = 0.0;
                return 0.0;
        }
    }

    State deriv(const State& x, double u) const {
        const double v1 = x[0], v2 = x[1], s = x[2];
        double zd1 = 0.0, zd2 = 0.0;
        const double f1 = friction(v1, x[3], zd1, p_.m1);
        const double f2 = friction(v2, x[4], zd2, p_.m2);
        const double coupling = p_.k12 * s + p_.c12 * (v1 - v2);
        State d;
        d[0] = (-coupling - f1) / p_.m1;
        d[1] = (coupling - f2 + u) / p_.m2;
        d[2] = v1 - v2;
        d[3] = zd1;
        d[4] = zd2;
        return d;
    }

    TwoCartParams p_;
    double ts_;
    State x_{};
};

}  // namespace

std::unique_ptr<DiscretePlant> make_lti_plant(const TransferFunction& tf, double ts,
                                              Discretization method) {
    StateSpace d = discretize(to_state_space(tf), ts, method);
    if (std::abs(d.d) > 1e-14) {
        throw std::invalid_argument("lti plant: direct feedthrough is not allowed in the loop");
    }
    return std::make_unique<LtiPlant>(std::move(d), ts);
}

std::unique_ptr<DiscretePlant> make_integrator_plant(double ts) {
    if (!(ts > 0)) throw std::invalid_argument("integrator plant: sample time must be > 0");
    return std::make_unique<IntegratorPlant>(ts);
}

std::unique_ptr<DiscretePlant> make_two_cart_plant(const TwoCartParams& params, double ts) {
    if (!(ts > 0)) throw std::invalid_argument("two cart plant: sample time must be > 0");
    return std::make_unique<TwoCartPlant>(params, ts);
}

Signal simulate_two_cart(const TwoCartParams& params, const Signal& u) {
    auto plant = make_two_cart_plant(params, u.ts);
    Eigen::VectorXd y(u.size());
    for (Eigen::Index t = 0; t < u.size(); ++t) {
        y[t] = plant->output();
        plant->advance(u.samples[t]);
    }
    return Signal(std::move(y), u.ts);
}

}  // namespace pnfir
