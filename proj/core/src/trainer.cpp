#include "pnfir/trainer.hpp"

#include <cmath>
#include <stdexcept>

namespace pnfir {

namespace {

void validate_spec(const std::vector<TrainingPair>& pairs, const SynthesisSpec& spec) {
    if (spec.m < 1) throw std::invalid_argument("train: filter order m must be >= 1");
    if (spec.liftings.empty()) throw std::invalid_argument("train: need at least one lifting");
    if (spec.gamma < 0) throw std::invalid_argument("train: gamma must be >= 0");
    if (pairs.empty()) throw std::invalid_argument("train: empty sampling set");
    for (const auto& f : spec.liftings) validate_lifting(f);
    bool external = false;
    for (const auto& f : spec.liftings) external = external || external_window(f) > 0;
    const double ts = pairs.front().u.ts;
    for (const auto& p : pairs) {
        if (p.u.size() < 1) throw std::invalid_argument("train: empty input signal");
        if (p.y.size() != p.u.size()) throw std::invalid_argument("train: output length mismatch");
        if (std::abs(p.u.ts - ts) > 1e-12 * ts) {
            throw std::invalid_argument("train: pairs have mixed sample times");
        }
        if (external && !p.q) {
            throw std::invalid_argument("train: external liftings need a q signal in every pair");
        }
        if (p.q && p.q->size() != p.u.size()) throw std::invalid_argument("train: q length mismatch");
        if (!spec.allow_order_above_data && p.u.size() < spec.m) {
            throw std::invalid_argument(
                "train: m exceeds a pair length; set allow_order_above_data to override");
        }
    }
    if (spec.passivity) {
        const auto& pc = *spec.passivity;
        if (pc.h < 1) throw std::invalid_argument("train: passivity horizon H must be >= 1");
        if (!(pc.rho > 0)) throw std::invalid_argument("train: passivity rho must be > 0");
        const Eigen::Index nb = static_cast<Eigen::Index>(spec.liftings.size());
        if (pc.rho_decay.size() != 1 && pc.rho_decay.size() != nb) {
            throw std::invalid_argument("train: rho_decay must be scalar or one per branch");
        }
        if (pc.epsilon_override && pc.epsilon_override->size() != 1 &&
            pc.epsilon_override->size() != nb) {
            throw std::invalid_argument("train: epsilon override must be scalar or one per branch");
        }
    }
}

Eigen::VectorXd broadcast(const Eigen::VectorXd& v, Eigen::Index nb) {
    if (v.size() == nb) return v;
    return Eigen::VectorXd::Constant(nb, v[0]);
}

}  // namespace

AssembledProblem assemble_regressor(const std::vector<TrainingPair>& pairs, const SynthesisSpec& spec) {
    validate_spec(pairs, spec);
    const Eigen::Index nb = static_cast<Eigen::Index>(spec.liftings.size());
    const Eigen::Index m = spec.m;
    const Eigen::Index nvars = nb * m + (spec.integrator ? 1 : 0);

    Eigen::Index rmax = 1;
    for (const auto& f : spec.liftings) rmax = std::max(rmax, input_window(f));
    const Eigen::Index burn = spec.burn_in ? m + rmax - 2 : 0;

    Eigen::Index rows = 0;
    for (const auto& p : pairs) rows += std::max<Eigen::Index>(0, p.u.size() - burn);
    if (rows < 1) throw std::invalid_argument("train: burn-in leaves no regression rows");

    AssembledProblem out;
    out.ts = pairs.front().u.ts;
    out.tap_offsets.resize(static_cast<std::size_t>(nb));
    for (Eigen::Index j = 0; j < nb; ++j) out.tap_offsets[static_cast<std::size_t>(j)] = j * m;
    out.alpha_index = spec.integrator ? nvars - 1 : -1;

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, nvars);
    Eigen::VectorXd b(rows);
    Eigen::Index row0 = 0;
    for (const auto& p : pairs) {
        const Eigen::Index n = p.u.size();
        const Eigen::Index kept = n - burn;
        if (kept < 1) continue;
        const Signal* q = p.q ? &*p.q : nullptr;
        for (Eigen::Index j = 0; j < nb; ++j) {
            const Eigen::VectorXd phi = lifting_profile(spec.liftings[static_cast<std::size_t>(j)], p.u, q);
            const Eigen::VectorXd phiu = phi.cwiseProduct(p.u.samples);
            for (Eigen::Index k = 0; k < m; ++k) {
                for (Eigen::Index t = std::max(burn, k); t < n; ++t) {
                    a(row0 + t - burn, j * m + k) = phi[t] * phiu[t - k];
                }
            }
        }
        if (spec.integrator) {
            double acc = 0.0;
            for (Eigen::Index t = 0; t < n; ++t) {
                acc += p.u.samples[t];
                if (t >= burn) a(row0 + t - burn, out.alpha_index) = out.ts * acc;
            }
        }
        b.segment(row0, kept) = p.y.samples.tail(kept);
        row0 += kept;
    }

    out.qp.regressor = std::move(a);
    out.qp.target = std::move(b);
    if (spec.gamma > 0) {
        out.qp.ridge = Eigen::VectorXd::Zero(nvars);
        out.qp.ridge.head(nb * m).setConstant(spec.gamma);
    }

    out.qp.constraints = LinearConstraintSet(nvars);
    if (spec.passivity) {
        const auto& pc = *spec.passivity;
        const Eigen::VectorXd decay = broadcast(pc.rho_decay, nb);
        Eigen::VectorXd eps(nb);
        if (pc.epsilon_override) {
            eps = broadcast(*pc.epsilon_override, nb);
        } else {
            for (Eigen::Index j = 0; j < nb; ++j) {
                eps[j] = epsilon_bound(spec.m, decay[j], pc.rho, pc.h);
            }
        }
        out.qp.constraints.append(
            frequency_constraints(out.tap_offsets, spec.m, pc.h, eps, nvars));
        out.qp.constraints.append(decay_bounds(out.tap_offsets, spec.m, pc.rho, decay, nvars));
    }
    if (spec.integrator) out.qp.constraints.add_bound(out.alpha_index, 0.0, kInf);
    return out;
}

TrainResult train(const std::vector<TrainingPair>& pairs, const SynthesisSpec& spec,
                  const SolverOptions& solver) {
    AssembledProblem ap = assemble_regressor(pairs, spec);
    TrainResult result;
    result.report = solve(ap.qp, solver);
    if (result.report.status != SolveStatus::optimal) return result;

    const Eigen::VectorXd& x = result.report.solution;
    result.op.ts = ap.ts;
    result.op.alpha = spec.integrator ? std::max(0.0, x[ap.alpha_index]) : 0.0;
    result.op.branches.reserve(spec.liftings.size());
    for (std::size_t j = 0; j < spec.liftings.size(); ++j) {
        NfirBranch branch;
        branch.lifting = spec.liftings[j];
        branch.taps = x.segment(ap.tap_offsets[j], spec.m);
        result.op.branches.push_back(std::move(branch));
    }
    const Eigen::VectorXd residual = ap.qp.regressor * x - ap.qp.target;
    result.rmse = std::sqrt(residual.squaredNorm() / static_cast<double>(residual.size()));
    return result;
}

}  // namespace pnfir
