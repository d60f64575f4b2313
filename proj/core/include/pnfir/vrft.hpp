#pragma once

#include <cstdint>
#include <vector>

#include "pnfir/csv.hpp"
#include "pnfir/plants.hpp"
#include "pnfir/reference_model.hpp"
#include "pnfir/trainer.hpp"

namespace pnfir {

/// Probe signal library. Every generator is pure in its arguments; the seeded
/// ones draw through the project Rng so outputs are identical across runs and
/// platforms.

/// amplitude * (1 - e^{-t ts / tc}), starting at t = 0.
Signal probe_filtered_step(Eigen::Index n, double ts, double tc, double amplitude = 1.0);

/// u(t) = F(A(t)) sin(F(w(t)) ts t) with piecewise constant amplitude and
/// frequency, each redrawn after a hold time ~ U[hold_lo, hold_hi] seconds.
/// F is a first order lag whose state starts at the first draw, so there is
/// no start transient.
struct TimevaryingSineParams {
    double omega_lo = 1.0;   // rad/s
    double omega_hi = 10.0;
    double amp_lo = 1.85;
    double amp_hi = 2.15;
    double hold_lo = 2.5;    // s
    double hold_hi = 5.0;
    double smooth_tc = 0.2;  // s
};
Signal probe_timevarying_sine(Eigen::Index n, double ts, std::uint64_t seed,
                              const TimevaryingSineParams& params = TimevaryingSineParams());

/// One constant batch per level (step ladder across batches).
std::vector<Signal> probe_step_ladder(const std::vector<double>& levels, Eigen::Index n, double ts);

/// Sum of sinusoids a_i sin(omega_i t ts + phi_i) with seeded uniform random
/// phases in [0, 2pi).
Signal probe_multisine(Eigen::Index n, double ts, std::uint64_t seed,
                       const std::vector<double>& omegas, const std::vector<double>& amplitudes);

/// Constant operating level plus a small multisine ripple. settle_samples
/// leading samples hold the pure constant so the plant can reach its
/// operating point; the caller drops them from the dataset.
Signal probe_constant_plus_sines(Eigen::Index n, double ts, std::uint64_t seed, double level,
                                 const std::vector<double>& omegas, double amplitude,
                                 Eigen::Index settle_samples);

/// Open loop probe: u* = excitation, y* = plant response from rest.
Batch probe_plant(DiscretePlant& plant, const Signal& excitation);

/// Virtual reference r* solving h * r = y by forward substitution, where h is
/// the impulse response of the discretized reference model. Leading zeros of
/// h (up to max_advance) shift the system; the final `advance` samples of y
/// cannot be inverted and are excluded, so reference.size() = y.size() - advance.
struct InversionResult {
    Signal reference;
    Eigen::Index advance = 0;
    /// Set when ||r||_inf grows beyond 1e6 ||y||_inf (non minimum phase M_r).
    bool growth_warning = false;
};
InversionResult invert_reference(const Signal& y, const ReferenceModel& mr, int max_advance = 3);

/// Ideal controller data: input u^c = r* - y*, output y^c = u*, optionally
/// the scheduling tap q^c = y*. All signals are trimmed to the valid range of
/// the inversion.
struct ControllerData {
    TrainingPair pair;
    Eigen::Index trimmed = 0;
    bool growth_warning = false;
};
ControllerData build_controller_dataset(const Signal& u_star, const Signal& y_star,
                                        const InversionResult& inversion, bool attach_scheduling);

}  // namespace pnfir
