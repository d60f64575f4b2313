#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "config.hpp"

namespace pnfir::cli {

/// The optimizer did not reach an optimal point (infeasible problem or
/// iteration limit). main maps this to exit code 3.
class SolverFailure : public std::runtime_error {
public:
    explicit SolverFailure(const std::string& what) : std::runtime_error(what) {}
};

/// State shared by one command invocation. Sections a command consumes are
/// registered with use(); finish() then rejects unread keys in them and
/// writes the resolved-config copy next to the outputs.
class RunContext {
public:
    RunContext(Config config, std::filesystem::path out, std::uint64_t seed)
        : config_(std::move(config)), out_(std::move(out)), seed_(seed) {}

    const Config& config() const { return config_; }
    const std::filesystem::path& out() const { return out_; }
    std::uint64_t seed() const { return seed_; }

    const Section& use(const Section& s);
    std::filesystem::path path(const std::string& name) const { return out_ / name; }
    void finish(const std::string& command);

private:
    Config config_;
    std::filesystem::path out_;
    std::uint64_t seed_;
    std::vector<const Section*> used_;
};

void cmd_plant(RunContext& ctx);
void cmd_vrft(RunContext& ctx);
void cmd_train(RunContext& ctx);
void cmd_verify(RunContext& ctx);
void cmd_simulate(RunContext& ctx);
void cmd_bench(RunContext& ctx);

}  // namespace pnfir::cli
