#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "pnfir/lifting.hpp"
#include "pnfir/signal.hpp"

namespace pnfir {

struct NfirBranch {
    LiftingFunction lifting;
    Eigen::VectorXd taps;
};

/// Bank of lifted FIR branches plus an optional parallel integrator:
///   y(t) = sum_j f_j(t) sum_k g_j(k) f_j(t-k) u(t-k) + alpha ts sum_{s<=t} u(s)
/// where f_j(t) is the lifting evaluated on the input window ending at t.
/// Causal with finite memory m+R-1 samples (ignoring the integrator).
struct NfirOperator {
    std::vector<NfirBranch> branches;
    double alpha = 0.0;
    double ts = 1.0;

    /// Largest input window R1 over all branches.
    Eigen::Index max_input_window() const;
    /// Nonzero when any branch is scheduled by an external signal.
    bool externally_driven() const;
    /// Number of past input samples that can influence the current output,
    /// m + R - 1 for tap count m and window length R (integrator excluded).
    Eigen::Index memory() const;
};

/// Plain FIR convolution y(t) = sum_k g(k) u(t-k).
Signal fir_apply(const Eigen::VectorXd& taps, const Signal& u);

/// Lifting values f(t) along the whole signal, windows ending at each t.
/// q may be null for liftings that ignore the external signal.
Eigen::VectorXd lifting_profile(const LiftingFunction& f, const Signal& u, const Signal* q = nullptr);

/// Full operator response. Throws when the operator is externally driven.
Signal nfir_apply(const NfirOperator& op, const Signal& u);

/// Response with the external signal q (same length and sample time as u).
/// Branches that ignore q behave exactly as in nfir_apply.
Signal nfir_apply_external(const NfirOperator& op, const Signal& u, const Signal& q);

/// Text serialization, bit exact round trip (coefficients as hex floats).
void save_operator(const NfirOperator& op, const std::filesystem::path& file);
NfirOperator load_operator(const std::filesystem::path& file);
void write_operator(std::ostream& out, const NfirOperator& op);
NfirOperator read_operator(std::istream& in);

}  // namespace pnfir
