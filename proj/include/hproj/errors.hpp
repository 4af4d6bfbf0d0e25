#pragma once

#include <stdexcept>
#include <string>

namespace hproj {

// Base type for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A point or parameter left the domain the operation is defined on.
struct DomainError : Error {
    using Error::Error;
};

// Construction-time validation failed (bad metric, bad IFS, bad config).
// The CLI maps this to the usage exit code.
struct ValidationError : Error {
    using Error::Error;
};

// Malformed configuration input; `field` is the offending key path.
struct UsageError : Error {
    std::string field;
    UsageError(const std::string& field_path, const std::string& msg)
        : Error(field_path + ": " + msg), field(field_path) {}
};

// A geodesic left the domain box before reaching the requested length.
struct TruncationError : Error {
    double exit_parameter;
    TruncationError(const std::string& msg, double exit_t)
        : Error(msg), exit_parameter(exit_t) {}
};

// An iterative solve did not reach its tolerance.
struct ConvergenceError : Error {
    double best_residual;
    ConvergenceError(const std::string& msg, double residual)
        : Error(msg), best_residual(residual) {}
};

// A projection foot landed on the line-extent boundary.
struct ExtentError : Error {
    double foot_parameter;
    ExtentError(const std::string& msg, double s)
        : Error(msg), foot_parameter(s) {}
};

// A generation request exceeded the configured cell budget.
struct BudgetError : Error {
    using Error::Error;
};

// A least-squares fit had no usable variance.
struct FitError : Error {
    using Error::Error;
};

}  // namespace hproj
