#include "pnfir/lifting.hpp"

#include <cmath>
#include <stdexcept>

namespace pnfir {

namespace {

struct WindowVisitor {
    Eigen::Index operator()(const IdentityLifting&) const { return 1; }
    Eigen::Index operator()(const VolcanoLifting&) const { return 1; }
    Eigen::Index operator()(const GaussianWindowLifting& f) const { return f.reference.size(); }
    Eigen::Index operator()(const ExternalGaussianLifting&) const { return 1; }
    Eigen::Index operator()(const TabulatedLifting&) const { return 1; }
};

}  // namespace

Eigen::Index input_window(const LiftingFunction& f) {
    return std::visit(WindowVisitor{}, f);
}

Eigen::Index external_window(const LiftingFunction& f) {
    return std::holds_alternative<ExternalGaussianLifting>(f) ? 1 : 0;
}

void validate_lifting(const LiftingFunction& f) {
    if (const auto* v = std::get_if<VolcanoLifting>(&f)) {
        if (!(v->radius > 0)) throw std::invalid_argument("volcano lifting: radius must be > 0");
    } else if (const auto* g = std::get_if<GaussianWindowLifting>(&f)) {
        if (g->reference.size() < 1) throw std::invalid_argument("gaussian lifting: empty reference window");
        if (!(g->sigma > 0)) throw std::invalid_argument("gaussian lifting: sigma must be > 0");
    } else if (const auto* e = std::get_if<ExternalGaussianLifting>(&f)) {
        if (!(e->sigma > 0)) throw std::invalid_argument("external gaussian lifting: sigma must be > 0");
    } else if (const auto* t = std::get_if<TabulatedLifting>(&f)) {
        if (t->knots.size() < 2) throw std::invalid_argument("tabulated lifting: need at least two knots");
        if (t->knots.size() != t->values.size()) {
            throw std::invalid_argument("tabulated lifting: knots/values size mismatch");
        }
        for (Eigen::Index i = 1; i < t->knots.size(); ++i) {
            if (!(t->knots[i] > t->knots[i - 1])) {
                throw std::invalid_argument("tabulated lifting: knots must be strictly increasing");
            }
        }
    }
}

double lifting_eval(const LiftingFunction& f, const Eigen::VectorXd& u_window,
                    const Eigen::VectorXd& q_window) {
    if (u_window.size() != input_window(f)) {
        throw std::invalid_argument("lifting_eval: input window length mismatch");
    }
    if (const auto* v = std::get_if<VolcanoLifting>(&f)) {
        const double d = std::abs(u_window[0] - v->center);
        return d < v->radius ? 1.0 : v->radius / d;
    }
    if (const auto* g = std::get_if<GaussianWindowLifting>(&f)) {
        return std::exp(-(u_window - g->reference).squaredNorm() / (2.0 * g->sigma));
    }
    if (const auto* e = std::get_if<ExternalGaussianLifting>(&f)) {
        if (q_window.size() != 1) {
            throw std::invalid_argument("lifting_eval: external lifting needs a length-1 q window");
        }
        const double d = q_window[0] - e->setpoint;
        return std::exp(-(d * d) / (2.0 * e->sigma));
    }
    if (const auto* t = std::get_if<TabulatedLifting>(&f)) {
        const double z = u_window[0];
        const Eigen::Index n = t->knots.size();
        if (z <= t->knots[0]) return t->values[0];
        if (z >= t->knots[n - 1]) return t->values[n - 1];
        Eigen::Index hi = 1;
        while (t->knots[hi] < z) ++hi;
        const double x0 = t->knots[hi - 1], x1 = t->knots[hi];
        const double w = (z - x0) / (x1 - x0);
        return (1.0 - w) * t->values[hi - 1] + w * t->values[hi];
    }
    return 1.0;
}

}  // namespace pnfir
