#pragma once

#include "manprox/types.hpp"

#include <functional>

namespace manprox {

struct KrylovResult {
  Vec x;
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
  bool breakdown = false;
};

/// Conjugate gradient squared for a nonsymmetric operator given by its action.
/// Starts from zero; stops when ‖b - A x‖ <= tol ‖b‖ (true residual checked on
/// exit).
KrylovResult cgs(const std::function<Vec(const Vec&)>& apply, const Vec& b, double tol,
                 int max_iter);

/// MINRES for a symmetric, possibly indefinite operator. Starts from zero.
KrylovResult minres(const std::function<Vec(const Vec&)>& apply, const Vec& b, double tol,
                    int max_iter);

}  // namespace manprox
