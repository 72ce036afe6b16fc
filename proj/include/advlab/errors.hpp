#ifndef ADVLAB_ERRORS_HPP
#define ADVLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace advlab {

/// Bad configuration values (non-positive thresholds, alpha > epsilon, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad runtime inputs (shape mismatches, labels out of range, empty batches).
struct InputError : std::runtime_error {
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed data files (bad magic, truncation, count mismatch).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace advlab

#endif // ADVLAB_ERRORS_HPP
