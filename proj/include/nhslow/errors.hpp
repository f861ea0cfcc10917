#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace nhslow {

// Caller supplied something malformed: wrong dimension, time out of range,
// bad config key. The CLI maps these to exit code 1.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Base for failures that come from the physics/numerics of a well-formed
// request (exit code 2).
class PhysicsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularityError : public PhysicsError {
public:
    SingularityError(const std::string& what, double condition_estimate)
        : PhysicsError(what), estimate_(condition_estimate) {}
    double condition_estimate() const noexcept { return estimate_; }

private:
    double estimate_;
};

class ConvergenceError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

// Eigenvector matrix too ill-conditioned or spectral gap too small: the
// trajectory is too close to an exceptional point.
class NearEpError : public PhysicsError {
public:
    NearEpError(const std::string& what, double measure)
        : PhysicsError(what), measure_(measure) {}
    double measure() const noexcept { return measure_; }

private:
    double measure_;
};

class MagnitudeError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

class BranchAmbiguityError : public PhysicsError {
public:
    BranchAmbiguityError(const std::string& what, std::size_t grid_point)
        : PhysicsError(what), grid_point_(grid_point) {}
    std::size_t grid_point() const noexcept { return grid_point_; }

private:
    std::size_t grid_point_;
};

class IndeterminateEndpointError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

}  // namespace nhslow
