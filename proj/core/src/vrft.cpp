#include "pnfir/vrft.hpp"

#include <cmath>
#include <stdexcept>

#include "pnfir/errors.hpp"
#include "pnfir/rng.hpp"

namespace pnfir {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void require_length(Eigen::Index n) {
    if (n < 1) throw std::invalid_argument("probe: length must be >= 1");
}

void require_ts(double ts) {
    if (!(ts > 0)) throw std::invalid_argument("probe: sample time must be > 0");
}

}  // namespace

Signal probe_filtered_step(Eigen::Index n, double ts, double tc, double amplitude) {
    require_length(n);
    require_ts(ts);
    if (!(tc > 0)) throw std::invalid_argument("filtered step: time constant must be > 0");
    Eigen::VectorXd u(n);
    for (Eigen::Index t = 0; t < n; ++t) u[t] = amplitude * (1.0 - std::exp(-t * ts / tc));
    return Signal(std::move(u), ts);
}

Signal probe_timevarying_sine(Eigen::Index n, double ts, std::uint64_t seed,
                              const TimevaryingSineParams& p) {
    require_length(n);
    require_ts(ts);
    if (!(p.hold_lo > 0) || p.hold_hi < p.hold_lo || !(p.smooth_tc > 0)) {
        throw std::invalid_argument("timevarying sine: bad hold times or smoothing constant");
    }
    Rng rng(seed);
    const double a = std::exp(-ts / p.smooth_tc);

    double hold = rng.uniform(p.hold_lo, p.hold_hi);
    double omega = rng.uniform(p.omega_lo, p.omega_hi);
    double amp = rng.uniform(p.amp_lo, p.amp_hi);
    double omega_f = omega;  // filter states start at the first draw
    double amp_f = amp;

    Eigen::VectorXd u(n);
    double clock = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
        if (clock >= hold) {
            clock -= hold;
            hold = rng.uniform(p.hold_lo, p.hold_hi);
            omega = rng.uniform(p.omega_lo, p.omega_hi);
            amp = rng.uniform(p.amp_lo, p.amp_hi);
        }
        omega_f = a * omega_f + (1.0 - a) * omega;
        amp_f = a * amp_f + (1.0 - a) * amp;
        u[t] = amp_f * std::sin(omega_f * ts * static_cast<double>(t));
        clock += ts;
    }
    return Signal(std::move(u), ts);
}

std::vector<Signal> probe_step_ladder(const std::vector<double>& levels, Eigen::Index n, double ts) {
    require_length(n);
    require_ts(ts);
    if (levels.empty()) throw std::invalid_argument("step ladder: no levels");
    std::vector<Signal> out;
    out.reserve(levels.size());
    for (const double level : levels) {
        out.emplace_back(Eigen::VectorXd::Constant(n, level), ts);
    }
    return out;
}

Signal probe_multisine(Eigen::Index n, double ts, std::uint64_t seed,
                       const std::vector<double>& omegas, const std::vector<double>& amplitudes) {
    require_length(n);
    require_ts(ts);
    if (omegas.empty() || omegas.size() != amplitudes.size()) {
        throw std::invalid_argument("multisine: omega/amplitude lists must match and be nonempty");
    }
    Rng rng(seed);
    std::vector<double> phases(omegas.size());
    for (auto& phi : phases) phi = rng.uniform(0.0, kTwoPi);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        for (Eigen::Index t = 0; t < n; ++t) {
            u[t] += amplitudes[i] * std::sin(omegas[i] * t * ts + phases[i]);
        }
    }
    return Signal(std::move(u), ts);
}

Signal probe_constant_plus_sines(Eigen::Index n, double ts, std::uint64_t seed, double level,
                                 const std::vector<double>& omegas, double amplitude,
                                 Eigen::Index settle_samples) {
    require_length(n);
    require_ts(ts);
    if (settle_samples < 0) throw std::invalid_argument("constant plus sines: negative settle length");
    if (omegas.empty()) throw std::invalid_argument("constant plus sines: no ripple frequencies");
    Rng rng(seed);
    std::vector<double> phases(omegas.size());
    for (auto& phi : phases) phi = rng.uniform(0.0, kTwoPi);
    Eigen::VectorXd u = Eigen::VectorXd::Constant(settle_samples + n, level);
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        for (Eigen::Index t = 0; t < n; ++t) {
            u[settle_samples + t] += amplitude * std::sin(omegas[i] * t * ts + phases[i]);
        }
    }
    return Signal(std::move(u), ts);
}

Batch probe_plant(DiscretePlant& plant, const Signal& excitation) {
    if (std::abs(plant.sample_time() - excitation.ts) > 1e-9 * excitation.ts) {
        throw std::invalid_argument("probe_plant: excitation sample time does not match plant");
    }
    plant.reset();
    Eigen::VectorXd y(excitation.size());
    for (Eigen::Index t = 0; t < excitation.size(); ++t) {
        y[t] = plant.output();
        plant.advance(excitation.samples[t]);
    }
    Batch batch;
    batch.u = excitation;
    batch.y = Signal(std::move(y), excitation.ts);
    return batch;
}

InversionResult invert_reference(const Signal& y, const ReferenceModel& mr, int max_advance) {
    const Eigen::Index n = y.size();
    if (n < 1) throw std::invalid_argument("invert_reference: empty signal");
    if (std::abs(mr.ts() - y.ts) > 1e-9 * y.ts) {
        throw std::invalid_argument("invert_reference: sample time mismatch with reference model");
    }
    if (max_advance < 0) throw std::invalid_argument("invert_reference: negative advance limit");

    const Eigen::VectorXd h = mr.impulse(n);
    Eigen::Index k0 = -1;
    for (Eigen::Index k = 0; k <= std::min<Eigen::Index>(max_advance, n - 1); ++k) {
        if (std::abs(h[k]) > 1e-10) {
            k0 = k;
            break;
        }
    }
    if (k0 < 0) {
        throw ConfigError("invert_reference: reference model not invertible (leading impulse "
                          "response below 1e-10 within the advance limit)");
    }

    const Eigen::Index nv = n - k0;
    Eigen::VectorXd r(nv);
    for (Eigen::Index t = 0; t < nv; ++t) {
        double acc = y.samples[t + k0];
        for (Eigen::Index j = 1; j <= t; ++j) acc -= h[k0 + j] * r[t - j];
        r[t] = acc / h[k0];
    }

    InversionResult out;
    out.advance = k0;
    const double ymax = y.samples.cwiseAbs().maxCoeff();
    out.growth_warning = r.cwiseAbs().maxCoeff() > 1e6 * ymax;
    out.reference = Signal(std::move(r), y.ts);
    return out;
}

ControllerData build_controller_dataset(const Signal& u_star, const Signal& y_star,
                                        const InversionResult& inversion, bool attach_scheduling) {
    if (u_star.size() != y_star.size()) {
        throw std::invalid_argument("build_controller_dataset: u*/y* length mismatch");
    }
    if (std::abs(u_star.ts - y_star.ts) > 1e-9 * y_star.ts) {
        throw std::invalid_argument("build_controller_dataset: u*/y* sample time mismatch");
    }
    const Eigen::Index nv = inversion.reference.size();
    if (nv + inversion.advance != y_star.size()) {
        throw std::invalid_argument("build_controller_dataset: inversion does not match this dataset");
    }
    ControllerData out;
    out.trimmed = inversion.advance;
    out.growth_warning = inversion.growth_warning;
    out.pair.u = Signal(inversion.reference.samples - y_star.samples.head(nv), u_star.ts);
    out.pair.y = Signal(u_star.samples.head(nv), u_star.ts);
    if (attach_scheduling) out.pair.q = Signal(y_star.samples.head(nv), u_star.ts);
    return out;
}

}  // namespace pnfir
