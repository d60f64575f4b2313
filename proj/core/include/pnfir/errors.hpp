#pragma once

#include <stdexcept>
#include <string>

namespace pnfir {

/// Invalid user-supplied configuration (bad keys, malformed files, out of
/// range parameters). The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A requested check failed (negative passivity margin, bad supply rate).
/// The CLI maps this to exit code 4.
class VerificationError : public std::runtime_error {
public:
    explicit VerificationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pnfir
