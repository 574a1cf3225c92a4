#pragma once

#include <stdexcept>
#include <string>

namespace robin {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Query outside the domain of a sampled coupling.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The coupling does not satisfy the W^1_inf hypothesis of the convergence estimates.
class HypothesisError : public Error {
public:
    using Error::Error;
};

class GridError : public Error {
public:
    using Error::Error;
};

/// Factorization of A + shift*M broke down.
class SingularPencilError : public Error {
public:
    using Error::Error;
};

class NoConvergenceError : public Error {
public:
    NoConvergenceError(const std::string& what, int iterations)
        : Error(what + " (after " + std::to_string(iterations) + " iterations)"), iterations_(iterations) {}
    int iterations() const noexcept { return iterations_; }

private:
    int iterations_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace robin
