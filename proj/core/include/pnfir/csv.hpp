#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pnfir/signal.hpp"

namespace pnfir {

/// One batch of sampled data. u is always present; y carries measured
/// outputs and q an external scheduling signal when the dataset has them.
struct Batch {
    Signal u;
    std::optional<Signal> y;
    std::optional<Signal> q;
};

/// Reads a batch from CSV with header "t,u[,y][,q]". Controller datasets use
/// the aliases u_c/y_c for the same columns. The time column must be a
/// uniform grid (tolerance 1e-9 of the inferred step) with at least two
/// rows. Throws ConfigError on malformed input.
Batch read_batch_csv(const std::filesystem::path& file);

/// Writes a batch with full round-trip precision, time starting at t = 0.
/// controller_names switches the header to the u_c/y_c aliases.
void write_batch_csv(const std::filesystem::path& file, const Batch& batch,
                     bool controller_names = false);

/// Generic numeric table, used for reports, traces and benchmark output.
struct Table {
    std::vector<std::string> header;
    std::vector<Eigen::VectorXd> columns;
};

void write_table_csv(const std::filesystem::path& file, const Table& table);
Table read_table_csv(const std::filesystem::path& file);

}  // namespace pnfir
