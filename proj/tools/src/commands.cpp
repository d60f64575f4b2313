#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <string>

#include "pnfir/closed_loop.hpp"
#include "pnfir/csv.hpp"
#include "pnfir/errors.hpp"
#include "pnfir/passivity.hpp"
#include "pnfir/rng.hpp"
#include "pnfir/trainer.hpp"
#include "pnfir/vrft.hpp"

#include "builders.hpp"

namespace pnfir::cli {

namespace {

std::string section_stem(const Section& s) { return s.tag().empty() ? s.kind() : s.tag(); }

Signal slice(const Signal& s, Eigen::Index from) {
    if (from <= 0) return s;
    if (from >= s.size()) throw ConfigError("probe settle window leaves no samples");
    return Signal(s.samples.segment(from, s.size() - from).eval(), s.ts);
}

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::max_iter: return "max_iter";
    }
    return "unknown";
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void write_text(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot write " + file.string());
    out << text;
}

}  // namespace

const Section& RunContext::use(const Section& s) {
    if (std::find(used_.begin(), used_.end(), &s) == used_.end()) used_.push_back(&s);
    return s;
}

void RunContext::finish(const std::string& command) {
    for (const Section* s : used_) s->reject_unread();
    config_.write_resolved(out_ / (command + "_resolved.cfg"), seed_, used_);
}

void cmd_plant(RunContext& ctx) {
    const auto plants = ctx.config().of_kind("plant");
    const auto probes = ctx.config().of_kind("probe");
    if (plants.empty()) throw ConfigError("plant: no [plant] section");
    if (probes.empty()) throw ConfigError("plant: no [probe] section");

    for (const Section* plant : plants) {
        ctx.use(*plant);
        const double ts = plant_ts(*plant);
        const auto simulate = open_loop_simulator(*plant);
        for (const Section* probe : probes) {
            ctx.use(*probe);
            const auto batches = build_probe(*probe, ts, ctx.seed());
            std::string base = section_stem(*probe);
            if (plants.size() > 1) base = section_stem(*plant) + "_" + base;
            for (std::size_t i = 0; i < batches.size(); ++i) {
                Batch out;
                out.u = slice(batches[i].u, batches[i].keep_from);
                out.y = slice(simulate(batches[i].u), batches[i].keep_from);
                const std::string name = base + "_" + std::to_string(i) + ".csv";
                write_batch_csv(ctx.path(name), out);
                std::printf("plant: wrote %s (%lld samples)\n", name.c_str(),
                            static_cast<long long>(out.u.size()));
            }
        }
    }
    ctx.finish("plant");
}

void cmd_vrft(RunContext& ctx) {
    const auto jobs = ctx.config().of_kind("vrft");
    if (jobs.empty()) throw ConfigError("vrft: no [vrft] section");

    for (const Section* job : jobs) {
        ctx.use(*job);
        const Section& plant = ctx.use(ctx.config().resolve("plant", job->str("plant", "")));
        const Section& probe = ctx.use(ctx.config().resolve("probe", job->str("probe", "")));
        const Section& reference = ctx.use(ctx.config().require("reference"));
        const double ts = plant_ts(plant);
        const ReferenceModel mr = build_reference(reference, ts);
        const auto simulate = open_loop_simulator(plant);
        const bool attach = job->flag("attach_scheduling", false);
        const int max_advance = static_cast<int>(job->integer("max_advance", 3));
        const std::string base = job->str("output", section_stem(*job));

        const auto batches = build_probe(probe, ts, ctx.seed());
        for (std::size_t i = 0; i < batches.size(); ++i) {
            const Signal u_star = slice(batches[i].u, batches[i].keep_from);
            const Signal y_star = slice(simulate(batches[i].u), batches[i].keep_from);
            const InversionResult inv = invert_reference(y_star, mr, max_advance);
            const ControllerData data = build_controller_dataset(u_star, y_star, inv, attach);
            if (data.growth_warning) {
                std::fprintf(stderr,
                             "vrft: warning: virtual reference for batch %zu grew beyond 1e6 of "
                             "the output; the reference model looks non minimum phase\n",
                             i);
            }
            const std::string name = base + "_" + std::to_string(i) + ".csv";
            Batch out;
            out.u = data.pair.u;
            out.y = data.pair.y;
            out.q = data.pair.q;
            write_batch_csv(ctx.path(name), out, true);

            std::string prov;
            prov += "command = vrft\n";
            prov += "dataset = " + name + "\n";
            prov += "plant = " + plant.name() + " (" + plant.str("kind") + ")\n";
            prov += "probe = " + probe.name() + " (" + probe.str("kind") + ")\n";
            prov += "reference = " + reference.name() + "\n";
            prov += "seed = " + std::to_string(ctx.seed()) + "\n";
            prov += "batch = " + std::to_string(i) + "\n";
            prov += "advance = " + std::to_string(inv.advance) + "\n";
            prov += "trimmed_tail_samples = " + std::to_string(data.trimmed) + "\n";
            prov += std::string("growth_warning = ") + (data.growth_warning ? "true" : "false") + "\n";
            prov += "regenerate = pnfir vrft --config vrft_resolved.cfg --seed " +
                    std::to_string(ctx.seed()) + "\n";
            write_text(ctx.path(name + ".provenance.txt"), prov);
            std::printf("vrft: wrote %s (%lld samples, advance %lld)\n", name.c_str(),
                        static_cast<long long>(data.pair.u.size()),
                        static_cast<long long>(inv.advance));
        }
    }
    ctx.finish("vrft");
}

void cmd_train(RunContext& ctx) {
    const auto jobs = ctx.config().of_kind("train");
    if (jobs.empty()) throw ConfigError("train: no [train] section");

    for (const Section* job : jobs) {
        ctx.use(*job);
        std::vector<TrainingPair> pairs;
        for (const std::string& file : job->words("data")) {
            Batch b = read_batch_csv(ctx.path(file));
            if (!b.y) throw ConfigError("train: dataset " + file + " has no output column");
            TrainingPair pair;
            pair.u = std::move(b.u);
            pair.y = std::move(*b.y);
            pair.q = std::move(b.q);
            pairs.push_back(std::move(pair));
        }
        const Section& synthesis =
            ctx.use(ctx.config().resolve("synthesis", job->str("synthesis", "")));
        const SynthesisSpec spec = build_synthesis(
            ctx.config(), synthesis, [&](const Section& s) -> const Section& { return ctx.use(s); });

        SolverOptions solver;
        solver.tol = job->num("tol", solver.tol);
        solver.max_iter = static_cast<int>(job->integer("max_iter", solver.max_iter));
        solver.polish = job->flag("polish", solver.polish);

        const std::string op_file = job->str("operator", section_stem(*job) + ".op");
        const TrainResult result = train(pairs, spec, solver);

        std::string report;
        report += "status = " + std::string(status_name(result.report.status)) + "\n";
        report += "iterations = " + std::to_string(result.report.iterations) + "\n";
        report += "primal_residual = " + format_number(result.report.primal_residual) + "\n";
        report += "dual_residual = " + format_number(result.report.dual_residual) + "\n";
        report += std::string("polished = ") + (result.report.polished ? "true" : "false") + "\n";
        report += std::string("min_norm = ") + (result.report.min_norm ? "true" : "false") + "\n";
        report += "wall_time_s = " + format_number(result.report.wall_time_s) + "\n";
        report += "rmse = " + format_number(result.rmse) + "\n";
        report += "alpha = " + format_number(result.op.alpha) + "\n";
        report += "pairs = " + std::to_string(pairs.size()) + "\n";
        write_text(ctx.path(op_file + ".report.txt"), report);

        if (result.report.status != SolveStatus::optimal) {
            ctx.finish("train");
            throw SolverFailure("train " + section_stem(*job) + ": solver status " +
                                status_name(result.report.status));
        }
        save_operator(result.op, ctx.path(op_file));
        std::printf("train %s: optimal in %d iterations, rmse %.6g, wrote %s\n",
                    section_stem(*job).c_str(), result.report.iterations, result.rmse,
                    op_file.c_str());
    }
    ctx.finish("train");
}

void cmd_verify(RunContext& ctx) {
    const auto jobs = ctx.config().of_kind("verify");
    if (jobs.empty()) throw ConfigError("verify: no [verify] section");

    std::string failures;
    for (const Section* job : jobs) {
        ctx.use(*job);
        const NfirOperator op = load_operator(ctx.path(job->str("operator")));
        const int grid = static_cast<int>(job->integer("grid", 4000));
        const int toeplitz_n = static_cast<int>(job->integer("toeplitz_n", 256));
        const double min_margin = job->num("min_margin", 0.0);
        const auto supply_checks = job->integer("supply_checks", 0);
        const auto supply_n = job->integer("supply_n", 200);
        const std::string stem = section_stem(*job);
        const std::string report_name = job->str("report", "verify_" + stem + ".csv");

        const auto nb = static_cast<Eigen::Index>(op.branches.size());
        Table report;
        report.header = {"branch", "margin", "toeplitz_min_eig"};
        report.columns.assign(3, Eigen::VectorXd(nb));
        Table nyquist;
        nyquist.header = {"branch", "omega", "re", "im"};
        nyquist.columns.assign(4, Eigen::VectorXd(nb * grid));

        for (Eigen::Index j = 0; j < nb; ++j) {
            const Eigen::VectorXd& taps = op.branches[static_cast<std::size_t>(j)].taps;
            const double margin = verify_frequency_margin(taps, grid);
            const double teig = toeplitz_n > 0
                                    ? toeplitz_min_eig(taps, toeplitz_n)
                                    : std::numeric_limits<double>::quiet_NaN();
            report.columns[0][j] = static_cast<double>(j);
            report.columns[1][j] = margin;
            report.columns[2][j] = teig;
            const FrequencyResponse fr = frequency_response(taps, grid);
            for (Eigen::Index k = 0; k < grid; ++k) {
                nyquist.columns[0][j * grid + k] = static_cast<double>(j);
                nyquist.columns[1][j * grid + k] = fr.omega[k];
                nyquist.columns[2][j * grid + k] = fr.re[k];
                nyquist.columns[3][j * grid + k] = fr.im[k];
            }
            std::printf("verify %s: branch %lld margin %.6g toeplitz %.6g\n", stem.c_str(),
                        static_cast<long long>(j), margin, teig);
            if (margin < min_margin) {
                failures += "verify " + stem + ": branch " + std::to_string(j) +
                            " margin " + format_number(margin) + " below " +
                            format_number(min_margin) + "\n";
            }
            if (toeplitz_n > 0 && teig < -1e-8) {
                failures += "verify " + stem + ": branch " + std::to_string(j) +
                            " toeplitz min eigenvalue " + format_number(teig) + "\n";
            }
        }
        write_table_csv(ctx.path(report_name), report);
        write_table_csv(ctx.path("nyquist_" + stem + ".csv"), nyquist);

        for (long long i = 0; i < supply_checks; ++i) {
            Rng rng(derive_seed(ctx.seed(), job->name(), static_cast<std::uint64_t>(i)));
            Eigen::VectorXd u(supply_n), q(supply_n);
            for (Eigen::Index t = 0; t < supply_n; ++t) u[t] = rng.gaussian();
            for (Eigen::Index t = 0; t < supply_n; ++t) q[t] = rng.gaussian();
            const Signal us(std::move(u), op.ts);
            const double rate = op.externally_driven()
                                    ? empirical_supply_rate(op, us, Signal(std::move(q), op.ts))
                                    : empirical_supply_rate(op, us);
            const double floor = -1e-9 * std::max(1.0, us.samples.squaredNorm());
            if (rate < floor) {
                failures += "verify " + stem + ": supply rate " + format_number(rate) +
                            " below " + format_number(floor) + " on random input " +
                            std::to_string(i) + "\n";
            }
        }

        // Fit check against held-out datasets, reported per file.
        if (job->has("data")) {
            const auto files = job->words("data");
            Table fit;
            fit.header = {"dataset", "rmse", "target_rms"};
            fit.columns.assign(3, Eigen::VectorXd(static_cast<Eigen::Index>(files.size())));
            for (std::size_t i = 0; i < files.size(); ++i) {
                Batch b = read_batch_csv(ctx.path(files[i]));
                if (!b.y) throw ConfigError("verify: dataset " + files[i] + " has no output column");
                const Signal yhat = b.q ? nfir_apply_external(op, b.u, *b.q) : nfir_apply(op, b.u);
                const Eigen::VectorXd err = yhat.samples - b.y->samples;
                fit.columns[0][static_cast<Eigen::Index>(i)] = static_cast<double>(i);
                fit.columns[1][static_cast<Eigen::Index>(i)] =
                    std::sqrt(err.squaredNorm() / static_cast<double>(err.size()));
                fit.columns[2][static_cast<Eigen::Index>(i)] =
                    std::sqrt(b.y->samples.squaredNorm() / static_cast<double>(b.y->size()));
            }
            write_table_csv(ctx.path("fit_" + stem + ".csv"), fit);
        }
    }
    ctx.finish("verify");
    if (!failures.empty()) throw VerificationError(failures);
}

void cmd_simulate(RunContext& ctx) {
    const auto jobs = ctx.config().of_kind("simulate");
    if (jobs.empty()) throw ConfigError("simulate: no [simulate] section");

    for (const Section* job : jobs) {
        ctx.use(*job);
        const Section& plant_section = ctx.use(ctx.config().resolve("plant", job->str("plant", "")));
        auto plant = loop_plant(plant_section);
        const double ts = plant->sample_time();
        const NfirOperator op = load_operator(ctx.path(job->str("operator")));

        Eigen::Index n;
        if (job->has("n")) {
            n = static_cast<Eigen::Index>(job->integer("n"));
        } else if (job->has("duration")) {
            n = static_cast<Eigen::Index>(std::llround(job->num("duration") / ts));
        } else {
            throw ConfigError("config [" + job->name() + "]: give n or duration");
        }
        if (n < 1) throw ConfigError("config [" + job->name() + "]: empty reference");

        const std::string kind = job->str("reference_kind");
        const double amplitude = job->num("amplitude", 1.0);
        const double omega = job->num("omega", 1.0);
        Eigen::VectorXd r(n);
        if (kind == "square") {
            for (Eigen::Index t = 0; t < n; ++t) {
                r[t] = std::sin(omega * t * ts) >= 0 ? amplitude : -amplitude;
            }
        } else if (kind == "sine") {
            for (Eigen::Index t = 0; t < n; ++t) r[t] = amplitude * std::sin(omega * t * ts);
        } else if (kind == "step") {
            r.setConstant(amplitude);
        } else if (kind == "zero") {
            r.setZero();
        } else {
            throw ConfigError("config [" + job->name() + "] reference_kind: unknown '" + kind + "'");
        }
        const Signal reference(std::move(r), ts);

        LoopOptions options;
        options.feed_output_as_schedule = job->flag("feed_output_as_schedule", false);
        options.transient = static_cast<Eigen::Index>(job->integer("transient", -1));
        options.crossover = job->num("crossover", 0.0);
        options.noise_sigma = job->num("noise_sigma", 0.0);
        options.noise_seed = derive_seed(ctx.seed(), job->name());
        std::optional<ReferenceModel> mr;
        if (job->flag("target", ctx.config().find("reference") != nullptr)) {
            mr = build_reference(ctx.use(ctx.config().require("reference")), ts);
            options.target = &*mr;
        }

        const LoopTrace trace = run_closed_loop(*plant, op, reference, options);

        const std::string stem = section_stem(*job);
        const std::string trace_name = job->str("trace", "trace_" + stem + ".csv");
        Table t;
        Eigen::VectorXd time(n);
        for (Eigen::Index i = 0; i < n; ++i) time[i] = static_cast<double>(i) * ts;
        t.header = {"t", "r", "e", "u", "y"};
        t.columns = {time, trace.r.samples, trace.e.samples, trace.u.samples, trace.y.samples};
        if (trace.q) {
            t.header.push_back("q");
            t.columns.push_back(trace.q->samples);
        }
        if (options.target != nullptr) {
            t.header.push_back("y_target");
            t.columns.push_back(trace.y_target.samples);
        }
        write_table_csv(ctx.path(trace_name), t);

        Table metrics;
        metrics.header = {"rmse", "max_abs", "rmse_low", "rmse_high", "skipped"};
        metrics.columns = {Eigen::VectorXd::Constant(1, trace.metrics.rmse),
                           Eigen::VectorXd::Constant(1, trace.metrics.max_abs),
                           Eigen::VectorXd::Constant(1, trace.metrics.rmse_low),
                           Eigen::VectorXd::Constant(1, trace.metrics.rmse_high),
                           Eigen::VectorXd::Constant(1, static_cast<double>(trace.metrics.skipped))};
        write_table_csv(ctx.path(trace_name + ".metrics.csv"), metrics);

        std::printf("simulate %s: %lld samples, rmse vs target %.6g, max |e| %.6g\n", stem.c_str(),
                    static_cast<long long>(n), trace.metrics.rmse, trace.metrics.max_abs);
    }
    ctx.finish("simulate");
}

void cmd_bench(RunContext& ctx) {
    const auto sections = ctx.config().of_kind("bench");
    if (sections.size() != 1) throw ConfigError("bench: exactly one [bench] section expected");
    const Section& b = ctx.use(*sections.front());

    const std::vector<double> ms = b.list("m", {25, 50, 100, 200});
    const std::vector<double> hs = b.list("h", {200, 400, 800});
    const auto repeats = std::max<long long>(1, b.integer("repeats", 3));
    const auto n = static_cast<Eigen::Index>(b.integer("n", 200));
    const double gamma = b.num("gamma", 0.0);
    const double rho = b.num("rho", 100.0);
    const double rho_decay = b.num("rho_decay", 0.975);
    const double epsilon = b.num("epsilon", 0.001);
    SolverOptions solver;
    solver.tol = b.num("tol", solver.tol);
    solver.max_iter = static_cast<int>(b.integer("max_iter", solver.max_iter));
    const std::string report_name = b.str("report", "bench.csv");

    // The workload mirrors the first-order identification experiment: fit a
    // passive FIR of order m to the lag response of a filtered step.
    const double ts = 0.05;
    TrainingPair pair;
    pair.u = probe_filtered_step(n, ts, 0.2);
    TransferFunction lag;
    lag.num = Eigen::VectorXd::Constant(1, 1.0);
    lag.den = (Eigen::VectorXd(2) << 1.0, 0.5).finished();
    pair.y = simulate_lti(lag, pair.u);

    Table out;
    out.header = {"m", "h", "median_s", "min_s", "max_s", "iterations", "optimal"};
    const auto cells = static_cast<Eigen::Index>(ms.size() * hs.size());
    out.columns.assign(7, Eigen::VectorXd(cells));

    Eigen::Index row = 0;
    for (const double m : ms) {
        for (const double h : hs) {
            SynthesisSpec spec;
            spec.liftings = {IdentityLifting{}};
            spec.m = static_cast<int>(m);
            spec.gamma = gamma;
            PassivityConfig pc;
            pc.h = static_cast<int>(h);
            pc.rho = rho;
            pc.rho_decay = Eigen::VectorXd::Constant(1, rho_decay);
            pc.epsilon_override = Eigen::VectorXd::Constant(1, epsilon);
            spec.passivity = pc;
            const AssembledProblem problem = assemble_regressor({pair}, spec);

            std::vector<double> times;
            int iterations = 0;
            bool optimal = true;
            for (long long rep = 0; rep < repeats; ++rep) {
                const SolverReport report = solve(problem.qp, solver);
                times.push_back(report.wall_time_s);
                iterations = report.iterations;
                optimal = optimal && report.status == SolveStatus::optimal;
            }
            out.columns[0][row] = m;
            out.columns[1][row] = h;
            out.columns[2][row] = median(times);
            out.columns[3][row] = *std::min_element(times.begin(), times.end());
            out.columns[4][row] = *std::max_element(times.begin(), times.end());
            out.columns[5][row] = iterations;
            out.columns[6][row] = optimal ? 1.0 : 0.0;
            std::printf("bench: m=%3d h=%4d median %.4fs (%d iterations, %s)\n",
                        static_cast<int>(m), static_cast<int>(h), median(times), iterations,
                        optimal ? "optimal" : "NOT optimal");
            ++row;
        }
    }
    write_table_csv(ctx.path(report_name), out);
    ctx.finish("bench");
}

}  // namespace pnfir::cli
