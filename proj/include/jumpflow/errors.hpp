#pragma once

#include <stdexcept>
#include <string>

namespace jumpflow {

/// Bad input to a constructor or builder (ordering, sign, count, coverage).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function (a < 0, eps <= 0, r < 1).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed input file.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pure-flux boundary data whose net flux does not match the total source.
class CompatibilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Linear solver failure (singular system, residual target missed).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Root scan in the 1D oracle found no sign change.
class NoRootError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace jumpflow
