#ifndef RQM_ERRORS_HPP
#define RQM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rqm {

// Error taxonomy used across the library.  The CLI maps these to exit codes:
// config -> 2, numeric -> 3.  `precondition` marks caller mistakes (bad
// arguments, mismatched grids) and maps to 2 when triggered by config input.
enum class ErrorKind {
    config,
    precondition,
    numeric,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

inline Error config_error(const std::string& msg) {
    return Error(ErrorKind::config, msg);
}

inline Error precondition_error(const std::string& msg) {
    return Error(ErrorKind::precondition, msg);
}

// Numeric-guard failures (non-convergent quadrature, resource budgets).
// `estimate` carries the achieved error estimate when one exists.
class NumericError : public Error {
  public:
    NumericError(const std::string& msg, double estimate = -1.0)
        : Error(ErrorKind::numeric, msg), estimate_(estimate) {}

    double estimate() const { return estimate_; }

  private:
    double estimate_;
};

}  // namespace rqm

#endif
