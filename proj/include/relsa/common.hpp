#ifndef RELSA_COMMON_HPP
#define RELSA_COMMON_HPP

#include <stdexcept>
#include <string>

namespace relsa {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation
/// (e.g. a tilting coefficient for which the normalizing integral diverges,
/// or a point outside a density's support).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Constraint target that no admissible density can satisfy.
class ConstraintError : public Error {
public:
    using Error::Error;
};

/// Iterative solver failed to converge; message carries diagnostics.
class SolverError : public Error {
public:
    using Error::Error;
};

/// Study configuration problem; message names the offending key/line.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace relsa

#endif
