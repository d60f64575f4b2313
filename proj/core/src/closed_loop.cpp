#include "pnfir/closed_loop.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

#include "pnfir/rng.hpp"

namespace pnfir {

NfirController::NfirController(NfirOperator op) : op_(std::move(op)) {
    if (op_.branches.empty()) throw std::invalid_argument("controller: operator has no branches");
    if (!(op_.ts > 0)) throw std::invalid_argument("controller: sample time must be > 0");
    if (op_.alpha < 0) throw std::invalid_argument("controller: integrator gain must be >= 0");
    for (const auto& b : op_.branches) {
        validate_lifting(b.lifting);
        if (b.taps.size() < 1) throw std::invalid_argument("controller: branch has no taps");
    }
    external_ = op_.externally_driven();
    r1_ = std::max<Eigen::Index>(op_.max_input_window(), 1);
    Eigen::Index r2 = 1;
    for (const auto& b : op_.branches) r2 = std::max(r2, external_window(b.lifting));
    r2_ = r2;
    u_hist_.assign(static_cast<std::size_t>(r1_), 0.0);
    q_hist_.assign(static_cast<std::size_t>(r2_), 0.0);
    v_hist_.resize(op_.branches.size());
    u_windows_.resize(op_.branches.size());
    q_windows_.resize(op_.branches.size());
    for (std::size_t j = 0; j < op_.branches.size(); ++j) {
        v_hist_[j].assign(static_cast<std::size_t>(op_.branches[j].taps.size()), 0.0);
        u_windows_[j].setZero(input_window(op_.branches[j].lifting));
        q_windows_[j].setZero(std::max<Eigen::Index>(external_window(op_.branches[j].lifting), 0));
    }
}

void NfirController::reset() {
    t_ = 0;
    acc_ = 0.0;
    std::fill(u_hist_.begin(), u_hist_.end(), 0.0);
    std::fill(q_hist_.begin(), q_hist_.end(), 0.0);
    for (auto& ring : v_hist_) std::fill(ring.begin(), ring.end(), 0.0);
}

double NfirController::step(double e) {
    if (external_) {
        throw std::logic_error("controller is externally driven; use step(e, q)");
    }
    return step_impl(e, 0.0);
}

double NfirController::step(double e, double q) { return step_impl(e, q); }

double NfirController::step_impl(double e, double q) {
    u_hist_[static_cast<std::size_t>(t_ % r1_)] = e;
    q_hist_[static_cast<std::size_t>(t_ % r2_)] = q;

    double y = 0.0;
    for (std::size_t j = 0; j < op_.branches.size(); ++j) {
        const auto& branch = op_.branches[j];
        Eigen::VectorXd& uw = u_windows_[j];
        for (Eigen::Index i = 0; i < uw.size(); ++i) {
            const Eigen::Index tau = t_ - (uw.size() - 1) + i;
            uw[i] = tau < 0 ? 0.0 : u_hist_[static_cast<std::size_t>(tau % r1_)];
        }
        Eigen::VectorXd& qw = q_windows_[j];
        for (Eigen::Index i = 0; i < qw.size(); ++i) {
            const Eigen::Index tau = t_ - (qw.size() - 1) + i;
            qw[i] = tau < 0 ? 0.0 : q_hist_[static_cast<std::size_t>(tau % r2_)];
        }
        const double phi = lifting_eval(branch.lifting, uw, qw);

        auto& ring = v_hist_[j];
        const Eigen::Index m = branch.taps.size();
        ring[static_cast<std::size_t>(t_ % m)] = phi * e;
        const Eigen::Index kmax = std::min(m - 1, t_);
        double acc = 0.0;
        for (Eigen::Index k = 0; k <= kmax; ++k) {
            acc += branch.taps[k] * ring[static_cast<std::size_t>((t_ - k) % m)];
        }
        y += phi * acc;
    }
    if (op_.alpha != 0.0) {
        acc_ += e;
        y += op_.alpha * op_.ts * acc_;
    }
    ++t_;
    return y;
}

namespace {

TrackingMetrics compute_metrics(const Signal& y, const Signal& target, Eigen::Index transient,
                                double crossover) {
    TrackingMetrics m;
    const Eigen::Index n = std::min(y.size(), target.size());
    const Eigen::Index skip = std::min(std::max<Eigen::Index>(transient, 0), n);
    m.skipped = skip;
    const Eigen::Index len = n - skip;
    if (len < 1) return m;

    const Eigen::VectorXd err = y.samples.segment(skip, len) - target.samples.segment(skip, len);
    m.rmse = std::sqrt(err.squaredNorm() / static_cast<double>(len));
    m.max_abs = err.cwiseAbs().maxCoeff();

    if (crossover > 0 && len >= 2) {
        Eigen::FFT<double> fft;
        std::vector<double> time(err.data(), err.data() + len);
        std::vector<std::complex<double>> spec;
        fft.fwd(spec, time);
        const double bin = 2.0 * M_PI / (static_cast<double>(len) * y.ts);
        double low = 0.0, high = 0.0;
        for (Eigen::Index k = 0; k < len; ++k) {
            const Eigen::Index folded = std::min<Eigen::Index>(k, len - k);
            const double power = std::norm(spec[static_cast<std::size_t>(k)]);
            (folded * bin <= crossover ? low : high) += power;
        }
        m.rmse_low = std::sqrt(low) / static_cast<double>(len);
        m.rmse_high = std::sqrt(high) / static_cast<double>(len);
    }
    return m;
}

}  // namespace

LoopTrace run_closed_loop(DiscretePlant& plant, const NfirOperator& controller, const Signal& r,
                          const LoopOptions& options) {
    if (std::abs(plant.sample_time() - r.ts) > 1e-9 * r.ts) {
        throw std::invalid_argument("run_closed_loop: reference sample time does not match plant");
    }
    if (std::abs(controller.ts - r.ts) > 1e-9 * r.ts) {
        throw std::invalid_argument("run_closed_loop: controller sample time does not match loop");
    }
    NfirController ctrl(controller);
    if (ctrl.externally_driven() && !options.feed_output_as_schedule) {
        throw std::invalid_argument(
            "run_closed_loop: externally driven controller needs feed_output_as_schedule");
    }
    const bool record_q = options.feed_output_as_schedule;
    const bool noisy = options.noise_sigma > 0;
    Rng noise(options.noise_seed);

    plant.reset();
    const Eigen::Index n = r.size();
    Eigen::VectorXd e(n), u(n), y(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        double ym = plant.output();
        if (noisy) ym += options.noise_sigma * noise.gaussian();
        y[t] = ym;
        e[t] = r.samples[t] - ym;
        u[t] = ctrl.externally_driven() ? ctrl.step(e[t], ym) : ctrl.step(e[t]);
        plant.advance(u[t]);
    }

    LoopTrace trace;
    trace.r = r;
    trace.e = Signal(std::move(e), r.ts);
    trace.u = Signal(std::move(u), r.ts);
    trace.y = Signal(std::move(y), r.ts);
    if (record_q) trace.q = trace.y;
    if (options.target != nullptr) {
        if (std::abs(options.target->ts() - r.ts) > 1e-9 * r.ts) {
            throw std::invalid_argument("run_closed_loop: target model sample time mismatch");
        }
        trace.y_target = options.target->apply(r);
        const Eigen::Index transient = options.transient < 0 ? ctrl.memory() : options.transient;
        trace.metrics = compute_metrics(trace.y, trace.y_target, transient, options.crossover);
    }
    return trace;
}

TrackingMetrics track_reference_model(const LoopTrace& trace, const ReferenceModel& mr,
                                      Eigen::Index transient, double crossover) {
    if (std::abs(mr.ts() - trace.r.ts) > 1e-9 * trace.r.ts) {
        throw std::invalid_argument("track_reference_model: sample time mismatch");
    }
    return compute_metrics(trace.y, mr.apply(trace.r), transient, crossover);
}

}  // namespace pnfir
