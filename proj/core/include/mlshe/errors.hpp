#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mlshe {

// Invalid argument value, e.g. a non-positive time or mismatched lengths.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A determinant or divisor vanished where the computation needs it nonzero.
class SingularityError : public std::runtime_error {
public:
    SingularityError(const std::string& what, int layer, std::size_t node)
        : std::runtime_error(what), layer_(layer), node_(node) {}
    int layer() const noexcept { return layer_; }
    std::size_t node() const noexcept { return node_; }

private:
    int layer_;
    std::size_t node_;
};

// Grid, potential or run-configuration problems detected before computing.
class ConfigurationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The requested Monte Carlo conditioning is practically impossible to satisfy.
class InfeasibleConfiguration : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller broke an input contract that cannot be checked by type alone.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Lattice time step too coarse for the noise multiplier to stay positive.
class StepSizeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mlshe
