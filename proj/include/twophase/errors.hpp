#pragma once

#include <stdexcept>
#include <string>

namespace twophase {

/// Failure categories. The CLI maps each to a process exit code.
enum class ErrorKind {
    Config = 2,
    Solver = 3,
    Numerical = 4,
    Io = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

/// Invalid configuration or violated parameter invariant.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

/// Steady solver could not produce a profile (shooting failure, vacuum, singularity).
class SolverError : public Error {
public:
    explicit SolverError(const std::string& what) : Error(ErrorKind::Solver, what) {}
};

/// Time integration abort: density below floor or non-finite values.
class NumericalAbort : public Error {
public:
    explicit NumericalAbort(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

}  // namespace twophase
