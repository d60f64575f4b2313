#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pnfir::cli {

/// One [section] of a run configuration. Keys are stored as raw text and
/// parsed on access; every access is recorded so a command can (a) reject
/// keys it did not understand and (b) emit a resolved copy of the config
/// with all defaults materialized.
class Section {
public:
    Section(std::string name, std::string kind, std::string tag)
        : name_(std::move(name)), kind_(std::move(kind)), tag_(std::move(tag)) {}

    const std::string& name() const { return name_; }
    const std::string& kind() const { return kind_; }
    const std::string& tag() const { return tag_; }

    bool has(const std::string& key) const;

    // Required keys: missing -> ConfigError naming section and key.
    std::string str(const std::string& key) const;
    double num(const std::string& key) const;
    long long integer(const std::string& key) const;
    bool flag(const std::string& key) const;
    std::vector<double> list(const std::string& key) const;
    std::vector<std::string> words(const std::string& key) const;

    // Defaulted keys: the default is recorded for the resolved copy.
    std::string str(const std::string& key, const std::string& def) const;
    double num(const std::string& key, double def) const;
    long long integer(const std::string& key, long long def) const;
    std::uint64_t u64(const std::string& key, std::uint64_t def) const;
    bool flag(const std::string& key, bool def) const;
    std::vector<double> list(const std::string& key, const std::vector<double>& def) const;

    /// Throws ConfigError when a present key was never read by the command
    /// that consumed this section (typo or key from the wrong kind).
    void reject_unread() const;

    void add_key(const std::string& key, const std::string& value);  // parser only
    void emit(std::string& out) const;

private:
    const std::string& raw(const std::string& key) const;
    void record_default(const std::string& key, const std::string& formatted) const;

    std::string name_, kind_, tag_;
    std::vector<std::pair<std::string, std::string>> entries_;
    mutable std::vector<std::pair<std::string, std::string>> defaults_;
    mutable std::map<std::string, bool> read_;
};

class Config {
public:
    static Config parse_file(const std::filesystem::path& file);
    static Config parse_text(const std::string& text, const std::string& origin);

    /// Section by full name ("plant.c1"); null when absent.
    const Section* find(const std::string& name) const;
    const Section& require(const std::string& name) const;
    /// All sections of a kind, in file order.
    std::vector<const Section*> of_kind(const std::string& kind) const;
    /// Resolves a section reference: tag given -> kind.tag must exist; tag
    /// empty -> exactly one section of the kind must exist.
    const Section& resolve(const std::string& kind, const std::string& tag) const;

    /// Writes [run] (with the effective seed) plus the listed sections,
    /// defaults materialized, in deterministic order.
    void write_resolved(const std::filesystem::path& file, std::uint64_t seed,
                        const std::vector<const Section*>& used) const;

private:
    std::vector<Section> sections_;
};

std::string format_number(double v);

}  // namespace pnfir::cli
