#pragma once

#include "pnfir/plants.hpp"
#include "pnfir/signal.hpp"

namespace pnfir {

/// Discrete reference model M_r used both as the closed loop target and as
/// the filter inverted during controller data synthesis.
class ReferenceModel {
public:
    /// Discretizes a continuous prototype at the working sample time.
    ReferenceModel(const TransferFunction& prototype, double ts,
                   Discretization method = Discretization::tustin);

    static ReferenceModel from_discrete(StateSpace discrete, double ts);

    /// Response from rest.
    Signal apply(const Signal& input) const;

    /// First n samples of the impulse response (input 1, 0, 0, ...).
    Eigen::VectorXd impulse(Eigen::Index n) const;

    double ts() const { return ts_; }
    const StateSpace& discrete() const { return ss_; }

private:
    ReferenceModel(StateSpace ss, double ts) : ss_(std::move(ss)), ts_(ts) {}

    StateSpace ss_;
    double ts_;
};

}  // namespace pnfir
