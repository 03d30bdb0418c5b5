#pragma once

#include <stdexcept>
#include <string>

namespace posc {

// Problem definition is structurally broken (T <= 0, empty action grid,
// non-finite coefficient evaluation, ...).
struct InvalidProblemError : std::runtime_error {
    explicit InvalidProblemError(const std::string& what) : std::runtime_error(what) {}
};

// Both coefficient bounds are zero; no Courant step exists.
struct DegenerateProblemError : std::runtime_error {
    explicit DegenerateProblemError(const std::string& what) : std::runtime_error(what) {}
};

// A trinomial probability left [0,1]; h and dx are mismatched.
struct CourantViolationError : std::runtime_error {
    explicit CourantViolationError(const std::string& what) : std::runtime_error(what) {}
};

// A likelihood factor or filter normalizer became nonpositive; h is too
// large relative to the observation-drift bound.
struct StepSizeError : std::runtime_error {
    explicit StepSizeError(const std::string& what) : std::runtime_error(what) {}
};

// An enumeration (measure grid, path tree, strategy set) exceeds its cap.
struct InstanceTooLargeError : std::runtime_error {
    explicit InstanceTooLargeError(const std::string& what) : std::runtime_error(what) {}
};

// Bad configuration file or command usage.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace posc
