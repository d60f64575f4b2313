#include "pnfir/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pnfir/errors.hpp"

namespace pnfir {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
}

double parse_double(const std::string& cell, const std::filesystem::path& file) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("csv " + file.string() + ": bad numeric cell '" + cell + "'");
    }
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Batch read_batch_csv(const std::filesystem::path& file) {
    Table t = read_table_csv(file);
    const auto& header = t.header;
    if (header.size() < 2 || header[0] != "t" || (header[1] != "u" && header[1] != "u_c")) {
        throw ConfigError("csv " + file.string() + ": header must start with t,u");
    }
    std::optional<int> y_col, q_col;
    for (std::size_t c = 2; c < header.size(); ++c) {
        if ((header[c] == "y" || header[c] == "y_c") && !y_col && !q_col) {
            y_col = static_cast<int>(c);
        } else if (header[c] == "q" && !q_col) {
            q_col = static_cast<int>(c);
        } else {
            throw ConfigError("csv " + file.string() + ": unexpected column '" + header[c] + "'");
        }
    }
    const Eigen::VectorXd& time = t.columns[0];
    if (time.size() < 2) throw ConfigError("csv " + file.string() + ": need at least two rows");
    const double ts = time[1] - time[0];
    if (!(ts > 0)) throw ConfigError("csv " + file.string() + ": time must be strictly increasing");
    for (Eigen::Index i = 1; i < time.size(); ++i) {
        if (std::abs(time[i] - time[i - 1] - ts) > 1e-9 * ts) {
            throw ConfigError("csv " + file.string() + ": time grid is not uniform");
        }
    }
    Batch b;
    b.u = Signal(t.columns[1], ts);
    if (y_col) b.y = Signal(t.columns[*y_col], ts);
    if (q_col) b.q = Signal(t.columns[*q_col], ts);
    return b;
}

void write_batch_csv(const std::filesystem::path& file, const Batch& batch, bool controller_names) {
    Table t;
    const Eigen::Index n = batch.u.size();
    Eigen::VectorXd time(n);
    for (Eigen::Index i = 0; i < n; ++i) time[i] = static_cast<double>(i) * batch.u.ts;
    t.header = {"t", controller_names ? "u_c" : "u"};
    t.columns = {time, batch.u.samples};
    if (batch.y) {
        if (batch.y->size() != n) throw ConfigError("write_batch_csv: y length mismatch");
        t.header.push_back(controller_names ? "y_c" : "y");
        t.columns.push_back(batch.y->samples);
    }
    if (batch.q) {
        if (batch.q->size() != n) throw ConfigError("write_batch_csv: q length mismatch");
        t.header.push_back("q");
        t.columns.push_back(batch.q->samples);
    }
    write_table_csv(file, t);
}

void write_table_csv(const std::filesystem::path& file, const Table& table) {
    if (table.header.size() != table.columns.size() || table.columns.empty()) {
        throw ConfigError("write_table_csv: header/column mismatch");
    }
    const Eigen::Index n = table.columns[0].size();
    for (const auto& c : table.columns) {
        if (c.size() != n) throw ConfigError("write_table_csv: ragged columns");
    }
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot open " + file.string() + " for writing");
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        out << (c ? "," : "") << table.header[c];
    }
    out << "\n";
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            out << (c ? "," : "") << format_double(table.columns[c][i]);
        }
        out << "\n";
    }
}

Table read_table_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("csv " + file.string() + ": empty file");
    Table t;
    t.header = split_row(line);
    if (t.header.empty()) throw ConfigError("csv " + file.string() + ": missing header");
    std::vector<std::vector<double>> cols(t.header.size());
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split_row(line);
        if (cells.size() != t.header.size()) {
            throw ConfigError("csv " + file.string() + ": row width does not match header");
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            cols[c].push_back(parse_double(cells[c], file));
        }
    }
    t.columns.resize(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        t.columns[c] = Eigen::Map<Eigen::VectorXd>(cols[c].data(), static_cast<Eigen::Index>(cols[c].size()));
    }
    return t;
}

}  // namespace pnfir
