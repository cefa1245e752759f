#pragma once

#include <stdexcept>
#include <string>

namespace vlab {

// Invalid argument outside an operation's mathematical domain.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A numerical routine could not reach its accuracy target.
struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Kernel evaluated at a point where it is undefined.
struct SingularityError : DomainError {
    using DomainError::DomainError;
};

struct SamplingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EstimationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requested check is outside the parameter range where its identity holds.
struct UnsupportedRegime : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace vlab
