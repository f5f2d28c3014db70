#pragma once

#include <stdexcept>
#include <string>

namespace plume_scout {

// Error taxonomy shared by every module. The CLI maps each class to an exit code.
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scenario is self-consistent but the requested quantity is undefined for it
// (e.g. a perfect background, a constant background).
struct InvalidScenario : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition (e.g. an infeasible action).
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace plume_scout
