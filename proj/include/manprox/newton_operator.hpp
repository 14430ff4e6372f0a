#pragma once

#include "manprox/manifold.hpp"
#include "manprox/prox.hpp"

#include <functional>

namespace manprox {

/// d -> ∇²f(x)[d] at a fixed point x.
using HessianAction = std::function<Vec(const Vec&)>;

/// The linear operator
///   J(x) = -[I - Λ_x + t Λ_x (∇²f(x) - L_x)],   L_x(ω) = W_x(ω, B_x λ),
///   Λ_x  = M - M B (BᵀMB)^{-1} Bᵀ M,
/// assembled once per outer iteration. The term of the generalized Jacobian
/// involving (D B_xᵀ) v is omitted; it vanishes at stationary points.
class NewtonState {
 public:
  /// Throws AssumptionViolation when the smallest eigenvalue of BᵀMB is
  /// <= 1e-12, i.e. the selected rows of B_x do not have full column rank.
  static NewtonState build(const Manifold& m, const Vec& x, const ProxSolution& prox, double t,
                           HessianAction ehess);

  /// Λ_x w.
  Vec apply_lambda(const Vec& w) const;
  /// S ω = ∇²f(x)[ω] - W_x(ω, B_x λ) for tangent ω.
  Vec apply_curvature(const Vec& omega) const;
  /// J(x)[ω] for tangent ω; the input is projected onto T_x M first and the
  /// output is tangent.
  Vec apply(const Vec& omega) const;

  const Manifold& manifold() const { return m_; }
  const Vec& point() const { return x_; }
  const Mat& basis() const { return basis_; }
  const Vec& mask() const { return mask_; }
  const Vec& lambda() const { return lambda_; }
  double t() const { return t_; }
  /// Smallest eigenvalue of BᵀMB.
  double gram_min_eig() const { return gram_min_eig_; }

 private:
  NewtonState(const Manifold& m) : m_(m) {}

  Manifold m_;
  Vec x_;
  Mat basis_;
  Vec mask_;
  Eigen::LLT<Mat> gram_;  // Cholesky of BᵀMB
  double gram_min_eig_ = 0.0;
  Vec lambda_;
  Vec normal_multiplier_;  // B_x λ
  double t_ = 0.0;
  HessianAction ehess_;
};

struct LinearSolveOptions {
  /// Relative residual target ‖J u + v‖ <= tol ‖v‖.
  double tol = 1e-10;
  int max_iter = 200;
  /// Cap for the symmetric reduced solve tried when CGS fails.
  int reduced_max_iter = 2000;
  /// Dense solve on a tangent basis is allowed when tangent_dim <= this.
  Index dense_fallback_dim = 200;
  bool allow_dense_fallback = true;
};

struct NewtonSolve {
  Vec u;
  int iterations = 0;
  bool used_reduced = false;
  bool used_dense = false;
  double rel_residual = 0.0;
};

/// Solves J(x)[u] = -v on T_x M by CGS. When CGS fails, the system is split
/// along the projector Λ: (I - Λ)u = (I - Λ)v, and Λu solves the symmetric
/// system tΛSΛ u₁ = Λv - tΛS(I - Λ)v with S = ∇²f - L_x, by MINRES. Last
/// resort is a dense solve on an orthonormal tangent basis when the tangent
/// space is small. Throws KrylovBreakdown or MaxLinIterations otherwise.
NewtonSolve solve_newton(const NewtonState& state, const Vec& v,
                         const LinearSolveOptions& opts = {});

/// Orthonormal basis of T_x M (ambient_dim x tangent_dim), dense.
Mat tangent_basis(const Manifold& m, const Vec& x);

/// Qᵀ J(x) Q for the orthonormal tangent basis Q of tangent_basis().
Mat materialize_tangent_operator(const NewtonState& state, const Mat& q);

/// Solution of J(x)[u] = -v by the dense route only.
Vec solve_newton_dense(const NewtonState& state, const Vec& v);

}  // namespace manprox
