#include "pnfir/signal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pnfir {

namespace {

void require_window(Eigen::Index window) {
    if (window < 1) throw std::invalid_argument("window length must be >= 1");
}

}  // namespace

Signal project(const Signal& u, Eigen::Index tau, Eigen::Index window) {
    require_window(window);
    Signal out;
    out.ts = u.ts;
    out.samples = Eigen::VectorXd::Zero(u.size());
    const Eigen::Index lo = std::max<Eigen::Index>(0, tau - window + 1);
    const Eigen::Index hi = std::min<Eigen::Index>(u.size() - 1, tau);
    for (Eigen::Index t = lo; t <= hi; ++t) out.samples[t] = u.samples[t];
    return out;
}

Eigen::VectorXd truncate_window(const Signal& u, Eigen::Index tau, Eigen::Index window) {
    require_window(window);
    Eigen::VectorXd out(window);
    for (Eigen::Index i = 0; i < window; ++i) out[i] = u.at(tau - window + 1 + i);
    return out;
}

double inner_product(const Signal& a, const Signal& b) {
    if (a.size() != b.size()) throw std::invalid_argument("inner_product: length mismatch");
    if (a.size() > 0 && std::abs(a.ts - b.ts) > 1e-12 * std::max(a.ts, b.ts)) {
        throw std::invalid_argument("inner_product: sample time mismatch");
    }
    return a.samples.dot(b.samples);
}

double norm(const Signal& s) {
    return s.samples.norm();
}

}  // namespace pnfir
