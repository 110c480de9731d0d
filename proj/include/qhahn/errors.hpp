#pragma once

#include <stdexcept>
#include <string>

namespace qhahn {

// Argument outside the documented domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Evaluation too close to (or exactly at) a singularity of the object.
class PoleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Infinite series whose parameters do not admit convergence.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dimension or occupancy guard exceeded.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Linear solve or inversion failed.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A truncated series did not reach the requested tolerance.
class ToleranceError : public std::runtime_error {
public:
    ToleranceError(const std::string& what, double measured)
        : std::runtime_error(what), measured_(measured) {}
    double measured() const noexcept { return measured_; }

private:
    double measured_;
};

}  // namespace qhahn
