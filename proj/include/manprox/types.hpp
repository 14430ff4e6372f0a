#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace manprox {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

/// Semismooth Newton on the multiplier equation did not reach its tolerance.
class MaxInnerIterations : public Error {
 public:
  using Error::Error;
};

/// B_x^T M B_x is not positive definite at the current active mask.
class AssumptionViolation : public Error {
 public:
  using Error::Error;
};

class KrylovBreakdown : public Error {
 public:
  using Error::Error;
};

class MaxLinIterations : public Error {
 public:
  using Error::Error;
};

class LineSearchFailure : public Error {
 public:
  using Error::Error;
};

/// The tangent-restricted model Hessian of the naive subproblem is not
/// positive definite, so the subproblem may be unbounded.
class NonconvexSubproblem : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace manprox
