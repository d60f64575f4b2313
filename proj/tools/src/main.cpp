#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pnfir/errors.hpp"

#include "commands.hpp"

namespace {

struct CommonOptions {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config, "Run configuration file")->required();
    cmd->add_option("--out", opts.out, "Output directory (created if missing)");
    cmd->add_option("--seed", opts.seed, "Master seed, overrides [run] seed");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace pnfir::cli;

    CLI::App app{"Passive nonlinear FIR synthesis and validation"};
    app.require_subcommand(1);

    std::map<std::string, void (*)(RunContext&)> handlers = {
        {"plant", cmd_plant},   {"vrft", cmd_vrft},         {"train", cmd_train},
        {"verify", cmd_verify}, {"simulate", cmd_simulate}, {"bench", cmd_bench},
    };
    std::map<std::string, const char*> blurbs = {
        {"plant", "Probe a plant and write input-output datasets"},
        {"vrft", "Build ideal-controller datasets by reference model inversion"},
        {"train", "Fit passive (N)FIR operators by constrained least squares"},
        {"verify", "Check passivity margins and held-out fit of an operator"},
        {"simulate", "Run a closed loop and record the trace"},
        {"bench", "Time the constrained solver over an (m, H) grid"},
    };

    std::map<std::string, CommonOptions> opts;
    for (const auto& [name, fn] : handlers) {
        add_common(app.add_subcommand(name, blurbs[name]), opts[name]);
    }

    CLI11_PARSE(app, argc, argv);

    const std::string name = app.get_subcommands().front()->get_name();
    const CommonOptions& common = opts[name];
    try {
        std::filesystem::create_directories(common.out);
        Config config = Config::parse_file(common.config);
        const std::uint64_t seed =
            common.seed ? *common.seed : config.require("run").u64("seed", 0);
        RunContext ctx(std::move(config), common.out, seed);
        handlers[name](ctx);
        return 0;
    } catch (const pnfir::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const SolverFailure& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return 3;
    } catch (const pnfir::VerificationError& e) {
        std::fprintf(stderr, "verification failed:\n%s", e.what());
        return 4;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
