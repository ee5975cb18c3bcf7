#pragma once

#include <stdexcept>
#include <string>

namespace attnet {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad or unreadable input: missing files, malformed CSV/JSON, unknown flags.
// CLI exit code 2.
class InputError : public Error {
public:
    explicit InputError(const std::string& msg) : Error(msg) {}
};

// Input parsed fine but violates a data contract: too few cases, constant
// columns, unmapped group values. CLI exit code 3.
class ContractError : public Error {
public:
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Numerical failure: non-convergence, degenerate designs. CLI exit code 4.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

} // namespace attnet
