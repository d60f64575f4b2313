#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "pnfir/lifting.hpp"
#include "pnfir/plants.hpp"
#include "pnfir/reference_model.hpp"
#include "pnfir/signal.hpp"
#include "pnfir/trainer.hpp"

#include "config.hpp"

namespace pnfir::cli {

double plant_ts(const Section& plant);

/// Batch simulator for any plant kind (dataset generation).
std::function<Signal(const Signal&)> open_loop_simulator(const Section& plant);

/// Stepped plant for closed-loop runs; only kinds without a closed-form
/// batch shortcut qualify (lti, integrator, two_cart).
std::unique_ptr<DiscretePlant> loop_plant(const Section& plant);

/// One excitation batch; samples before keep_from settle the plant at its
/// operating point and are dropped from emitted datasets.
struct ProbeBatch {
    Signal u;
    Eigen::Index keep_from = 0;
};
std::vector<ProbeBatch> build_probe(const Section& probe, double ts, std::uint64_t master_seed);

std::vector<LiftingFunction> build_liftings(const Section& liftings);

ReferenceModel build_reference(const Section& reference, double expected_ts);

/// Synthesis spec from [synthesis*]; the lifting bank section, when named,
/// is looked up in the config and recorded via on_use.
SynthesisSpec build_synthesis(const Config& config, const Section& synthesis,
                              const std::function<const Section&(const Section&)>& on_use);

}  // namespace pnfir::cli
