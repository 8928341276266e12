#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace gaussot {

// Error taxonomy. The CLI maps these onto exit codes: InvalidInput -> 2,
// numerical precondition failures -> 3, NotConverged -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
  using Error::Error;
};
struct NotPsd : Error {
  using Error::Error;
};
struct SingularMatrix : Error {
  using Error::Error;
};
struct NotPositiveDefinite : Error {
  using Error::Error;
};
struct NotIntegrable : Error {
  using Error::Error;
};
struct InfeasiblePrimal : Error {
  using Error::Error;
};
struct InfeasibleDual : Error {
  using Error::Error;
};
struct NumericalInconsistency : Error {
  using Error::Error;
};
struct Unsupported : Error {
  using Error::Error;
};

// Iterative solver gave up. Carries the last residual and, when meaningful,
// the best iterate seen so far.
struct NotConverged : Error {
  NotConverged(const std::string& msg, double resid) : Error(msg), residual(resid) {}
  NotConverged(const std::string& msg, double resid, Eigen::MatrixXd best)
      : Error(msg), residual(resid), best_iterate(std::move(best)) {}

  double residual = 0.0;
  Eigen::MatrixXd best_iterate;
};

}  // namespace gaussot
