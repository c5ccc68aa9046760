#pragma once

#include <stdexcept>
#include <string>

namespace mstates {

/// Bad input: malformed files, out-of-range parameters, inconsistent shapes.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation that cannot produce a meaningful number (singular
/// covariance, non-finite likelihood, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mstates
