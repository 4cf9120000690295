#pragma once

#include <stdexcept>
#include <string>

namespace fp {

// Shape disagreement between matrices / layers.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file (bad magic, truncation, count mismatch).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid run configuration or usage.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Measurement-protocol discipline violated (e.g. retraining a frozen probe).
struct ProtocolError : std::runtime_error {
    explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/Inf or other numerical breakdown.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Input on which the requested quantity is undefined (e.g. zero-variance CKA).
struct DegenerateInputError : std::runtime_error {
    explicit DegenerateInputError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fp
