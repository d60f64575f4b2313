#include "pnfir/reference_model.hpp"

#include <stdexcept>

namespace pnfir {

ReferenceModel::ReferenceModel(const TransferFunction& prototype, double ts, Discretization method)
    : ReferenceModel(discretize(to_state_space(prototype), ts, method), ts) {}

ReferenceModel ReferenceModel::from_discrete(StateSpace discrete, double ts) {
    if (!(ts > 0)) throw std::invalid_argument("reference model: sample time must be > 0");
    if (discrete.a.rows() != discrete.a.cols() || discrete.b.size() != discrete.a.rows() ||
        discrete.c.size() != discrete.a.rows()) {
        throw std::invalid_argument("reference model: inconsistent state space dimensions");
    }
    return ReferenceModel(std::move(discrete), ts);
}

Signal ReferenceModel::apply(const Signal& input) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(ss_.a.rows());
    Eigen::VectorXd y(input.size());
    for (Eigen::Index t = 0; t < input.size(); ++t) {
        const double u = input.samples[t];
        y[t] = (x.size() ? ss_.c.dot(x) : 0.0) + ss_.d * u;
        if (x.size()) x = ss_.a * x + ss_.b * u;
    }
    return Signal(std::move(y), input.ts);
}

Eigen::VectorXd ReferenceModel::impulse(Eigen::Index n) const {
    if (n < 1) throw std::invalid_argument("reference model: impulse length must be >= 1");
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    u[0] = 1.0;
    return apply(Signal(std::move(u), ts_)).samples;
}

}  // namespace pnfir
