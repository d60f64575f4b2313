#include "builders.hpp"

#include <cmath>

#include "pnfir/errors.hpp"
#include "pnfir/rng.hpp"
#include "pnfir/vrft.hpp"

namespace pnfir::cli {

namespace {

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

TransferFunction parse_tf(const Section& s) {
    TransferFunction tf;
    tf.num = to_vector(s.list("num"));
    tf.den = to_vector(s.list("den"));
    return tf;
}

Discretization parse_discretization(const Section& s, const std::string& def) {
    const std::string v = s.str("discretization", def);
    if (v == "zoh") return Discretization::zoh;
    if (v == "tustin") return Discretization::tustin;
    throw ConfigError("config [" + s.name() + "] discretization: expected zoh or tustin");
}

TwoCartParams parse_two_cart(const Section& p) {
    TwoCartParams tc;
    tc.m1 = p.num("m1", tc.m1);
    tc.m2 = p.num("m2", tc.m2);
    tc.k12 = p.num("k12", tc.k12);
    tc.c12 = p.num("c12", tc.c12);
    tc.drag_quad = p.num("drag_quad", tc.drag_quad);
    tc.drag_lin = p.num("drag_lin", tc.drag_lin);
    tc.substeps = static_cast<int>(p.integer("substeps", tc.substeps));
    tc.lugre.sigma0 = p.num("lugre_sigma0", tc.lugre.sigma0);
    tc.lugre.sigma2 = p.num("lugre_sigma2", tc.lugre.sigma2);
    tc.lugre.fc = p.num("lugre_fc", tc.lugre.fc);
    tc.lugre.fs = p.num("lugre_fs", tc.lugre.fs);
    tc.lugre.vs = p.num("lugre_vs", tc.lugre.vs);
    tc.lugre.c1 = p.num("lugre_c1", tc.lugre.c1);
    tc.lugre.c0 = p.num("lugre_c0", tc.lugre.c0);
    const std::string friction = p.str("friction", "lugre");
    if (friction == "lugre") {
        tc.friction = FrictionKind::lugre;
    } else if (friction == "quadratic_drag") {
        tc.friction = FrictionKind::quadratic_drag;
    } else if (friction == "none") {
        tc.friction = FrictionKind::none;
    } else {
        throw ConfigError("config [" + p.name() + "] friction: unknown kind '" + friction + "'");
    }
    return tc;
}

Eigen::Index parse_count(const Section& s, const std::string& key) {
    const long long n = s.integer(key);
    if (n < 1) throw ConfigError("config [" + s.name() + "] " + key + ": must be >= 1");
    return static_cast<Eigen::Index>(n);
}

std::vector<double> linspace(const Section& s, const std::string& key) {
    const auto spec = s.list(key);
    if (spec.size() != 3 || spec[2] < 1 || spec[2] != std::floor(spec[2])) {
        throw ConfigError("config [" + s.name() + "] " + key + ": expected 'lo hi count'");
    }
    const auto count = static_cast<std::size_t>(spec[2]);
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = count == 1 ? spec[0] : spec[0] + (spec[1] - spec[0]) * i / double(count - 1);
    }
    return out;
}

std::vector<double> values_or_linspace(const Section& s, const std::string& plain,
                                       const std::string& lin) {
    const bool a = s.has(plain), b = s.has(lin);
    if (a == b) {
        throw ConfigError("config [" + s.name() + "]: give exactly one of " + plain + " / " + lin);
    }
    return a ? s.list(plain) : linspace(s, lin);
}

}  // namespace

double plant_ts(const Section& plant) {
    const double ts = plant.num("ts");
    if (!(ts > 0)) throw ConfigError("config [" + plant.name() + "] ts: must be > 0");
    return ts;
}

std::function<Signal(const Signal&)> open_loop_simulator(const Section& p) {
    const std::string kind = p.str("kind");
    const double ts = plant_ts(p);
    if (kind == "lti") {
        const TransferFunction tf = parse_tf(p);
        const Discretization disc = parse_discretization(p, "zoh");
        return [tf, disc](const Signal& u) { return simulate_lti(tf, u, disc); };
    }
    if (kind == "integrator") {
        return [ts](const Signal& u) {
            auto plant = make_integrator_plant(ts);
            return *probe_plant(*plant, u).y;
        };
    }
    if (kind == "saturated_lag") {
        const double tc = p.num("tc", 0.5);
        const double limit = p.num("limit", 1.0);
        return [tc, limit](const Signal& u) { return saturated_lag_response(u, tc, limit); };
    }
    if (kind == "potassium") {
        PotassiumParams params;
        params.conductance = p.num("conductance", params.conductance);
        params.reversal = p.num("reversal", params.reversal);
        return [params](const Signal& u) { return potassium_response(u, params); };
    }
    if (kind == "two_cart") {
        const TwoCartParams params = parse_two_cart(p);
        return [params](const Signal& u) { return simulate_two_cart(params, u); };
    }
    throw ConfigError("config [" + p.name() + "] kind: unknown plant kind '" + kind + "'");
}

std::unique_ptr<DiscretePlant> loop_plant(const Section& p) {
    const std::string kind = p.str("kind");
    const double ts = plant_ts(p);
    if (kind == "lti") {
        return make_lti_plant(parse_tf(p), ts, parse_discretization(p, "zoh"));
    }
    if (kind == "integrator") return make_integrator_plant(ts);
    if (kind == "two_cart") return make_two_cart_plant(parse_two_cart(p), ts);
    throw ConfigError("config [" + p.name() + "]: plant kind '" + kind +
                      "' has no stepped form for closed-loop runs");
}

std::vector<ProbeBatch> build_probe(const Section& pr, double ts, std::uint64_t master) {
    const std::string kind = pr.str("kind");
    const Eigen::Index n = parse_count(pr, "n");
    std::vector<ProbeBatch> out;

    if (kind == "filtered_step") {
        const double tc = pr.num("tc", 0.2);
        const double amplitude = pr.num("amplitude", 1.0);
        out.push_back({probe_filtered_step(n, ts, tc, amplitude), 0});
        return out;
    }
    if (kind == "zero") {
        const auto batches = static_cast<Eigen::Index>(pr.integer("batches", 1));
        for (Eigen::Index i = 0; i < batches; ++i) {
            out.push_back({Signal(Eigen::VectorXd::Zero(n), ts), 0});
        }
        return out;
    }
    if (kind == "timevarying_sine") {
        TimevaryingSineParams params;
        params.omega_lo = pr.num("omega_lo", params.omega_lo);
        params.omega_hi = pr.num("omega_hi", params.omega_hi);
        params.amp_lo = pr.num("amp_lo", params.amp_lo);
        params.amp_hi = pr.num("amp_hi", params.amp_hi);
        params.hold_lo = pr.num("hold_lo", params.hold_lo);
        params.hold_hi = pr.num("hold_hi", params.hold_hi);
        params.smooth_tc = pr.num("smooth_tc", params.smooth_tc);
        const auto batches = static_cast<Eigen::Index>(pr.integer("batches", 1));
        for (Eigen::Index i = 0; i < batches; ++i) {
            const std::uint64_t seed = derive_seed(master, pr.name(), static_cast<std::uint64_t>(i));
            out.push_back({probe_timevarying_sine(n, ts, seed, params), 0});
        }
        return out;
    }
    if (kind == "step_ladder") {
        for (Signal& s : probe_step_ladder(values_or_linspace(pr, "levels", "levels_linspace"), n, ts)) {
            out.push_back({std::move(s), 0});
        }
        return out;
    }
    if (kind == "multisine") {
        const std::vector<double> omegas = values_or_linspace(pr, "omegas", "omegas_linspace");
        std::vector<double> amplitudes;
        if (pr.has("amplitudes")) {
            amplitudes = pr.list("amplitudes");
        } else {
            amplitudes.assign(omegas.size(), pr.num("amplitude", 1.0));
        }
        const auto batches = static_cast<Eigen::Index>(pr.integer("batches", 1));
        for (Eigen::Index i = 0; i < batches; ++i) {
            const std::uint64_t seed = derive_seed(master, pr.name(), static_cast<std::uint64_t>(i));
            out.push_back({probe_multisine(n, ts, seed, omegas, amplitudes), 0});
        }
        return out;
    }
    if (kind == "constant_plus_sines") {
        const std::vector<double> levels = values_or_linspace(pr, "levels", "levels_linspace");
        const std::vector<double> omegas = values_or_linspace(pr, "omegas", "omegas_linspace");
        const double amplitude = pr.num("amplitude", 1.0);
        const double settle_time = pr.num("settle_time", 0.0);
        const auto settle = static_cast<Eigen::Index>(std::llround(settle_time / ts));
        for (std::size_t i = 0; i < levels.size(); ++i) {
            const std::uint64_t seed = derive_seed(master, pr.name(), i);
            out.push_back(
                {probe_constant_plus_sines(n, ts, seed, levels[i], omegas, amplitude, settle),
                 settle});
        }
        return out;
    }
    throw ConfigError("config [" + pr.name() + "] kind: unknown probe kind '" + kind + "'");
}

std::vector<LiftingFunction> build_liftings(const Section& l) {
    std::vector<LiftingFunction> bank;
    if (l.has("volcano_widths")) {
        const double center = l.num("volcano_center", 0.0);
        for (const double w : l.list("volcano_widths")) {
            bank.push_back(VolcanoLifting{center, w});
        }
    }
    if (l.has("gaussian_centers") || l.has("gaussian_centers_linspace")) {
        const double sigma = l.num("gaussian_sigma");
        for (const double c : values_or_linspace(l, "gaussian_centers", "gaussian_centers_linspace")) {
            bank.push_back(GaussianWindowLifting{Eigen::VectorXd::Constant(1, c), sigma});
        }
    }
    if (l.has("external_setpoints")) {
        const double sigma = l.num("external_sigma");
        for (const double c : l.list("external_setpoints")) {
            bank.push_back(ExternalGaussianLifting{c, sigma});
        }
    }
    if (l.flag("identity", false)) bank.push_back(IdentityLifting{});
    if (bank.empty()) {
        throw ConfigError("config [" + l.name() + "]: lifting bank is empty");
    }
    return bank;
}

ReferenceModel build_reference(const Section& r, double expected_ts) {
    const double ts = r.num("ts");
    if (std::abs(ts - expected_ts) > 1e-9 * expected_ts) {
        throw ConfigError("config [" + r.name() + "] ts: does not match the plant sample time");
    }
    return ReferenceModel(parse_tf(r), ts, parse_discretization(r, "tustin"));
}

SynthesisSpec build_synthesis(const Config& config, const Section& s,
                              const std::function<const Section&(const Section&)>& on_use) {
    SynthesisSpec spec;
    if (s.has("liftings")) {
        spec.liftings = build_liftings(on_use(config.resolve("liftings", s.str("liftings"))));
    } else {
        spec.liftings = {IdentityLifting{}};
    }
    spec.m = static_cast<int>(parse_count(s, "m"));
    spec.gamma = s.num("gamma", 0.0);
    spec.integrator = s.flag("integrator", false);
    spec.burn_in = s.flag("burn_in", false);
    spec.allow_order_above_data = s.flag("allow_order_above_data", false);
    if (s.flag("passivity", true)) {
        PassivityConfig pc;
        pc.h = static_cast<int>(parse_count(s, "h"));
        pc.rho = s.num("rho");
        pc.rho_decay = to_vector(s.list("rho_decay"));
        if (s.has("epsilon")) pc.epsilon_override = to_vector(s.list("epsilon"));
        spec.passivity = pc;
    } else if (s.has("h") || s.has("rho") || s.has("rho_decay") || s.has("epsilon")) {
        throw ConfigError("config [" + s.name() + "]: passivity keys given but passivity = false");
    }
    return spec;
}

}  // namespace pnfir::cli
