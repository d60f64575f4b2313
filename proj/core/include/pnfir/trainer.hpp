#pragma once

#include <optional>
#include <vector>

#include "pnfir/nfir.hpp"
#include "pnfir/passivity.hpp"
#include "pnfir/qp.hpp"
#include "pnfir/signal.hpp"

namespace pnfir {

struct TrainingPair {
    Signal u;
    Signal y;
    std::optional<Signal> q;
};

struct SynthesisSpec {
    std::vector<LiftingFunction> liftings;
    int m = 1;
    double gamma = 0.0;
    bool integrator = false;
    std::optional<PassivityConfig> passivity;
    /// Discard the first m+R-2 regression rows of each pair; those outputs
    /// read zero padded inputs across the batch boundary.
    bool burn_in = false;
    /// Lifts the precondition m <= shortest pair length. The regressor is
    /// then rank deficient by construction; pair with gamma > 0.
    bool allow_order_above_data = false;
};

/// Regressor stacked over pairs with variable order (g_0 .. g_{nb-1}, alpha):
///   A(t, off_j + k) = f_j(w(t)) f_j(w(t-k)) u(t-k)
/// plus, when the integrator is on, a final column ts * cumsum(u) and the
/// bound alpha >= 0. gamma enters as a ridge on tap variables only.
struct AssembledProblem {
    QuadraticProgram qp;
    std::vector<Eigen::Index> tap_offsets;
    Eigen::Index alpha_index = -1;
    double ts = 1.0;
};
AssembledProblem assemble_regressor(const std::vector<TrainingPair>& pairs, const SynthesisSpec& spec);

struct TrainResult {
    NfirOperator op;  // empty branches unless report.status == optimal
    SolverReport report;
    double rmse = 0.0;
};
TrainResult train(const std::vector<TrainingPair>& pairs, const SynthesisSpec& spec,
                  const SolverOptions& solver = SolverOptions());

}  // namespace pnfir
