#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace nlmob {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A particle configuration violates x_{i+1} - x_i >= 1/(N M).
class ConeViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Carries the best iterate found before the solver gave up.
template <class Result>
class NonConvergenceWith : public NonConvergence {
public:
    NonConvergenceWith(const std::string& what, Result best)
        : NonConvergence(what), best_(std::move(best)) {}

    const Result& best() const noexcept { return best_; }

private:
    Result best_;
};

// Adaptive time stepping shrank below its floor.
class StepFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed study configuration. The message names the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace nlmob
