#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace permloss {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IVec = Eigen::VectorXi;
using IMat = Eigen::MatrixXi;

/// Base of every error raised by the library. `kind()` is a stable short tag
/// that the CLI prints in its JSON error record.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define PERMLOSS_ERROR(Name, tag)                                  \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(tag, what) {}   \
  }

PERMLOSS_ERROR(InvalidArity, "invalid-arity");
PERMLOSS_ERROR(ShapeError, "shape");
PERMLOSS_ERROR(UnsupportedOperation, "unsupported-operation");
PERMLOSS_ERROR(NumericError, "numeric");
PERMLOSS_ERROR(NoMinimizer, "no-minimizer");
PERMLOSS_ERROR(DegenerateTemplate, "degenerate-template");
PERMLOSS_ERROR(RegularityViolation, "regularity-violation");
PERMLOSS_ERROR(DivergenceError, "divergence");
PERMLOSS_ERROR(InvalidTransform, "invalid-transform");
PERMLOSS_ERROR(InvalidArgument, "invalid-argument");

#undef PERMLOSS_ERROR

/// Solver failure; carries the residual (gradient norm or duality gap) at exit.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error("solver", what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

inline void require_size(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + ": expected length " + std::to_string(want) +
                     ", got " + std::to_string(got));
  }
}

}  // namespace permloss
