#pragma once

#include <Eigen/Dense>

namespace pnfir {

/// Uniformly sampled scalar signal. Treated as an element of l2 supported on
/// [0, size): reads outside the support return 0. Functions below never
/// mutate their inputs; they return fresh signals.
struct Signal {
    Eigen::VectorXd samples;
    double ts = 1.0;

    Signal() = default;
    Signal(Eigen::VectorXd s, double sample_time) : samples(std::move(s)), ts(sample_time) {}

    Eigen::Index size() const { return samples.size(); }

    /// Sample with zero padding outside the support.
    double at(Eigen::Index t) const {
        return (t >= 0 && t < samples.size()) ? samples[t] : 0.0;
    }
};

/// Windowed projection: keeps samples with index in [tau-window+1, tau] and
/// zeroes the rest. The result has the same length as the input.
Signal project(const Signal& u, Eigen::Index tau, Eigen::Index window);

/// Dense window vector [u(tau-window+1), ..., u(tau)], oldest sample first,
/// zero padded where the window extends outside the support.
Eigen::VectorXd truncate_window(const Signal& u, Eigen::Index tau, Eigen::Index window);

/// l2 inner product. Mismatched lengths or sample times are an error, not a
/// resample: silent padding hides dataset bugs.
double inner_product(const Signal& a, const Signal& b);

double norm(const Signal& s);

}  // namespace pnfir
