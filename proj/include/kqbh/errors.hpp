#pragma once

#include <stdexcept>
#include <string>

namespace kqbh {

/// Thrown when a point lies outside the domain of a chart or observable
/// (origin singularity, a <= 0 on the Cartesian chart, non-finite input).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Thrown by the dual-number primitives; the message names the primitive.
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Implicit step whose Newton iteration did not converge.
class StepFailure : public std::runtime_error {
public:
    StepFailure(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Invalid run configuration (maps to CLI exit code 2).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace kqbh
