#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "pnfir/errors.hpp"

namespace pnfir::cli {

namespace {

// Everything a section of a given kind may contain. Parsing rejects unknown
// section kinds and unknown keys outright; a silent hyperparameter typo must
// never reach a solver.
const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"run", {"schema", "seed"}},
        {"plant",
         {"kind", "ts", "discretization", "num", "den", "tc", "limit", "conductance", "reversal",
          "m1", "m2", "k12", "c12", "friction", "drag_quad", "drag_lin", "substeps",
          "lugre_sigma0", "lugre_sigma2", "lugre_fc", "lugre_fs", "lugre_vs", "lugre_c1",
          "lugre_c0"}},
        {"probe",
         {"kind", "n", "batches", "tc", "amplitude", "amplitudes", "omega_lo", "omega_hi",
          "amp_lo", "amp_hi", "hold_lo", "hold_hi", "smooth_tc", "levels", "levels_linspace",
          "omegas", "omegas_linspace", "settle_time"}},
        {"reference", {"num", "den", "ts", "discretization"}},
        {"liftings",
         {"identity", "volcano_center", "volcano_widths", "gaussian_centers",
          "gaussian_centers_linspace", "gaussian_sigma", "external_setpoints", "external_sigma"}},
        {"synthesis",
         {"liftings", "m", "gamma", "integrator", "passivity", "h", "rho", "rho_decay", "epsilon",
          "burn_in", "allow_order_above_data"}},
        {"train", {"data", "synthesis", "operator", "tol", "max_iter", "polish"}},
        {"vrft", {"plant", "probe", "output", "attach_scheduling", "max_advance"}},
        {"verify",
         {"operator", "data", "grid", "toeplitz_n", "min_margin", "supply_checks", "supply_n",
          "report"}},
        {"simulate",
         {"plant", "operator", "reference_kind", "amplitude", "omega", "n", "duration",
          "feed_output_as_schedule", "target", "transient", "crossover", "noise_sigma", "trace"}},
        {"bench",
         {"m", "h", "repeats", "n", "gamma", "tol", "max_iter", "rho", "rho_decay", "epsilon",
          "report"}},
    };
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool valid_word(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::islower(c) || std::isdigit(c) || c == '_';
    });
}

double parse_number(const std::string& section, const std::string& key, const std::string& text) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || text.empty()) {
        throw ConfigError("config [" + section + "] " + key + ": '" + text + "' is not a number");
    }
    return v;
}

}  // namespace

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool Section::has(const std::string& key) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const auto& kv) { return kv.first == key; });
}

const std::string& Section::raw(const std::string& key) const {
    for (const auto& kv : entries_) {
        if (kv.first == key) {
            read_[key] = true;
            return kv.second;
        }
    }
    throw ConfigError("config [" + name_ + "]: missing required key '" + key + "'");
}

void Section::record_default(const std::string& key, const std::string& formatted) const {
    for (const auto& kv : defaults_) {
        if (kv.first == key) return;
    }
    defaults_.emplace_back(key, formatted);
}

std::string Section::str(const std::string& key) const { return raw(key); }

double Section::num(const std::string& key) const { return parse_number(name_, key, raw(key)); }

long long Section::integer(const std::string& key) const {
    const double v = num(key);
    const long long i = static_cast<long long>(v);
    if (static_cast<double>(i) != v) {
        throw ConfigError("config [" + name_ + "] " + key + ": expected an integer");
    }
    return i;
}

bool Section::flag(const std::string& key) const {
    const std::string v = raw(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config [" + name_ + "] " + key + ": expected true/false");
}

std::vector<std::string> Section::words(const std::string& key) const {
    std::istringstream ss(raw(key));
    std::vector<std::string> out;
    std::string w;
    while (ss >> w) out.push_back(w);
    if (out.empty()) {
        throw ConfigError("config [" + name_ + "] " + key + ": empty list");
    }
    return out;
}

std::vector<double> Section::list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& w : words(key)) out.push_back(parse_number(name_, key, w));
    return out;
}

std::string Section::str(const std::string& key, const std::string& def) const {
    if (has(key)) return raw(key);
    record_default(key, def);
    return def;
}

double Section::num(const std::string& key, double def) const {
    if (has(key)) return num(key);
    record_default(key, format_number(def));
    return def;
}

long long Section::integer(const std::string& key, long long def) const {
    if (has(key)) return integer(key);
    record_default(key, std::to_string(def));
    return def;
}

std::uint64_t Section::u64(const std::string& key, std::uint64_t def) const {
    if (!has(key)) {
        record_default(key, std::to_string(def));
        return def;
    }
    const std::string v = raw(key);
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || v.empty()) {
        throw ConfigError("config [" + name_ + "] " + key + ": expected an unsigned integer");
    }
    return parsed;
}

bool Section::flag(const std::string& key, bool def) const {
    if (has(key)) return flag(key);
    record_default(key, def ? "true" : "false");
    return def;
}

std::vector<double> Section::list(const std::string& key, const std::vector<double>& def) const {
    if (has(key)) return list(key);
    std::string joined;
    for (const double v : def) {
        if (!joined.empty()) joined += ' ';
        joined += format_number(v);
    }
    record_default(key, joined);
    return def;
}

void Section::reject_unread() const {
    for (const auto& kv : entries_) {
        if (!read_.count(kv.first)) {
            throw ConfigError("config [" + name_ + "]: key '" + kv.first +
                              "' is not used by this section's kind/options");
        }
    }
}

void Section::add_key(const std::string& key, const std::string& value) {
    if (has(key)) throw ConfigError("config [" + name_ + "]: duplicate key '" + key + "'");
    entries_.emplace_back(key, value);
}

void Section::emit(std::string& out) const {
    out += "[" + name_ + "]\n";
    for (const auto& kv : entries_) out += kv.first + " = " + kv.second + "\n";
    for (const auto& kv : defaults_) out += kv.first + " = " + kv.second + "\n";
    out += "\n";
}

Config Config::parse_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_text(buffer.str(), file.string());
}

Config Config::parse_text(const std::string& text, const std::string& origin) {
    Config cfg;
    Section* current = nullptr;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError(where + ": malformed section header");
            const std::string name = trim(t.substr(1, t.size() - 2));
            const auto dot = name.find('.');
            const std::string kind = dot == std::string::npos ? name : name.substr(0, dot);
            const std::string tag = dot == std::string::npos ? "" : name.substr(dot + 1);
            if (!valid_word(kind) || (dot != std::string::npos && !valid_word(tag))) {
                throw ConfigError(where + ": malformed section name '" + name + "'");
            }
            if (!schema().count(kind)) {
                throw ConfigError(where + ": unknown section kind '" + kind + "'");
            }
            if (cfg.find(name) != nullptr) {
                throw ConfigError(where + ": duplicate section [" + name + "]");
            }
            cfg.sections_.emplace_back(name, kind, tag);
            current = &cfg.sections_.back();
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        if (current == nullptr) throw ConfigError(where + ": key outside any section");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (!valid_word(key)) throw ConfigError(where + ": malformed key '" + key + "'");
        if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
        if (!schema().at(current->kind()).count(key)) {
            throw ConfigError(where + ": key '" + key + "' is not in the [" + current->kind() +
                              "] schema");
        }
        current->add_key(key, value);
    }
    const Section* run = cfg.find("run");
    if (run == nullptr) throw ConfigError(origin + ": missing [run] section");
    if (run->integer("schema") != 1) {
        throw ConfigError(origin + ": unsupported schema version (expected 1)");
    }
    return cfg;
}

const Section* Config::find(const std::string& name) const {
    for (const auto& s : sections_) {
        if (s.name() == name) return &s;
    }
    return nullptr;
}

const Section& Config::require(const std::string& name) const {
    const Section* s = find(name);
    if (s == nullptr) throw ConfigError("config: missing section [" + name + "]");
    return *s;
}

std::vector<const Section*> Config::of_kind(const std::string& kind) const {
    std::vector<const Section*> out;
    for (const auto& s : sections_) {
        if (s.kind() == kind) out.push_back(&s);
    }
    return out;
}

const Section& Config::resolve(const std::string& kind, const std::string& tag) const {
    if (!tag.empty()) {
        for (const auto& s : sections_) {
            if (s.kind() == kind && s.tag() == tag) return s;
        }
        throw ConfigError("config: no [" + kind + "." + tag + "] section");
    }
    const auto all = of_kind(kind);
    if (all.empty()) throw ConfigError("config: missing [" + kind + "] section");
    if (all.size() > 1) {
        throw ConfigError("config: several [" + kind + "] sections; reference one by tag");
    }
    return *all.front();
}

void Config::write_resolved(const std::filesystem::path& file, std::uint64_t seed,
                            const std::vector<const Section*>& used) const {
    std::string out;
    out += "[run]\nschema = 1\nseed = " + std::to_string(seed) + "\n\n";
    for (const Section* s : used) {
        if (s->kind() == "run") continue;
        s->emit(out);
    }
    std::ofstream f(file);
    if (!f) throw ConfigError("cannot write resolved config " + file.string());
    f << out;
}

}  // namespace pnfir::cli
