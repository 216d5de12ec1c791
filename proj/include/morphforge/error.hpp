#pragma once

#include <stdexcept>
#include <string>

namespace morphforge {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem-level failures: missing files, unwritable paths.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Malformed or unsupported file contents, distinct from I/O failures.
class DecodeError : public Error {
public:
    explicit DecodeError(const std::string& msg) : Error(msg) {}
};

// Violated preconditions: bad shapes, missing landmarks, invalid config.
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

// Iterative solver failed to reach its tolerance.
class SolverError : public Error {
public:
    SolverError(const std::string& msg, double residual)
        : Error(msg), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

}  // namespace morphforge
