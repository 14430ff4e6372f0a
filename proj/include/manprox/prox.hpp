#pragma once

#include "manprox/manifold.hpp"

#include <optional>

namespace manprox {

/// Entrywise max(|z_i| - tau, 0) sgn(z_i).
Vec soft_threshold(const Vec& z, double tau);

/// Diagonal of M_x: 1 where |z_i| > tau, 0 otherwise (the boundary maps to 0).
Vec active_mask(const Vec& z, double tau);

/// Same mask computed from the subproblem data, z = x - t (egrad + B_x λ).
Vec active_mask(const Manifold& m, const Vec& x, const Vec& egrad, const Vec& lambda, double t,
                double mu);

struct ProxOptions {
  /// Absolute tolerance on ‖Ψ(λ)‖; a negative value selects 1e-13·√(ambient_dim).
  double tol = -1.0;
  int max_iter = 100;
  int max_backtracks = 30;
  /// Residual below which a stalled iteration is accepted as converged.
  double floor_tol = 1e-10;
};

struct ProxSolution {
  Vec v;
  Vec lambda;
  Vec mask;
  double residual = 0.0;
  int inner_iters = 0;
  /// Residual history ‖Ψ(λ_j)‖, one entry per iterate including the start.
  std::vector<double> residual_history;
};

/// Solves
///   min_{v ∈ T_x M} <egrad, v> + ‖v‖²/(2t) + μ‖x + v‖₁
/// through its multiplier equation
///   Ψ(λ) = B_xᵀ(soft_threshold(x - t(egrad + B_x λ), tμ) - x) = 0
/// by a regularized semismooth Newton iteration. Throws MaxInnerIterations
/// when the tolerance is not met within the iteration cap.
ProxSolution solve_tangent_prox(const Manifold& m, const Vec& x, const Vec& egrad, double t,
                                double mu, const Vec* warm_lambda = nullptr,
                                const ProxOptions& opts = {});

/// Value of the concave dual q(λ) of the subproblem (without the constant f(x)).
double prox_dual_value(const Manifold& m, const Vec& x, const Vec& egrad, double t, double mu,
                       const Vec& lambda);

/// Ψ(λ) as defined above.
Vec prox_multiplier_residual(const Manifold& m, const Vec& x, const Vec& egrad, double t,
                             double mu, const Vec& lambda);

}  // namespace manprox
