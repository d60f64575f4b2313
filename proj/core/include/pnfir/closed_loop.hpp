#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pnfir/nfir.hpp"
#include "pnfir/plants.hpp"
#include "pnfir/reference_model.hpp"
#include "pnfir/signal.hpp"

namespace pnfir {

/// Sample-by-sample controller evaluation: ring buffers hold the last
/// max-window error samples and the last m_j lifted products per branch,
/// plus the running integrator accumulator. Output matches nfir_apply on the
/// accumulated error history sample for sample (causality makes this exact).
class NfirController {
public:
    explicit NfirController(NfirOperator op);

    double step(double e);
    /// Externally driven variant; branches without an external tap ignore q.
    double step(double e, double q);
    void reset();

    const NfirOperator& op() const { return op_; }
    Eigen::Index memory() const { return op_.memory(); }
    bool externally_driven() const { return external_; }

private:
    double step_impl(double e, double q);

    NfirOperator op_;
    bool external_ = false;
    Eigen::Index r1_ = 1;
    Eigen::Index r2_ = 1;
    Eigen::Index t_ = 0;
    double acc_ = 0.0;
    std::vector<double> u_hist_;
    std::vector<double> q_hist_;
    std::vector<std::vector<double>> v_hist_;
    std::vector<Eigen::VectorXd> u_windows_;
    std::vector<Eigen::VectorXd> q_windows_;
};

struct TrackingMetrics {
    double rmse = 0.0;
    double max_abs = 0.0;
    /// Error split at the crossover frequency (DFT bins; the two squares add
    /// up to rmse^2). Zero when the split is disabled.
    double rmse_low = 0.0;
    double rmse_high = 0.0;
    Eigen::Index skipped = 0;
};

struct LoopTrace {
    Signal r, e, u, y;
    std::optional<Signal> q;
    Signal y_target;          // empty when no target model was given
    TrackingMetrics metrics;  // vs y_target when present
};

struct LoopOptions {
    const ReferenceModel* target = nullptr;
    /// Tap the measured plant output into the controller's scheduling input.
    bool feed_output_as_schedule = false;
    /// Samples excluded from metrics; -1 selects the controller memory.
    Eigen::Index transient = -1;
    /// Band split crossover in rad/s; <= 0 disables the split.
    double crossover = 0.0;
    /// Additive seeded Gaussian measurement noise on y (off by default).
    double noise_sigma = 0.0;
    std::uint64_t noise_seed = 0;
};

/// One step per sample: read y(t) from the plant state, e(t) = r(t) - y(t),
/// evaluate the controller on the error history, advance the plant one ZOH
/// step with u(t). Well posed because every plant behind DiscretePlant is
/// strictly proper; no extra computation delay is inserted.
LoopTrace run_closed_loop(DiscretePlant& plant, const NfirOperator& controller, const Signal& r,
                          const LoopOptions& options = LoopOptions());

/// Metrics of an existing trace against the target M_r r.
TrackingMetrics track_reference_model(const LoopTrace& trace, const ReferenceModel& mr,
                                      Eigen::Index transient, double crossover = 0.0);

}  // namespace pnfir
