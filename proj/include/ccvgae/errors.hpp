#pragma once

#include <stdexcept>
#include <string>

namespace ccvgae {

// Shape disagreement between operands (matmul, elementwise ops, ...).
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

// Pivot collapsed during LU factorization.
struct SingularMatrixError : std::runtime_error {
    explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid value fed to a numeric kernel (log of non-positive entry, ...).
struct NumericDomainError : std::domain_error {
    explicit NumericDomainError(const std::string& what) : std::domain_error(what) {}
};

// Malformed or inconsistent input files / directories.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration (unknown key, incompatible mode, bad fraction, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Training diverged (NaN/Inf detected) or another runtime numeric failure.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ccvgae
