#pragma once

#include <stdexcept>
#include <string>

namespace gridguard {

/// Bad input: malformed documents, out-of-range settings, violated
/// preconditions. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure while running a valid request (non-convergence, I/O, training
/// divergence). The CLI maps this to exit code 2.
class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gridguard
