#pragma once

#include "manprox/types.hpp"

#include <random>
#include <string>

namespace manprox {

enum class ManifoldKind { kSphere, kStiefel, kOblique };

/// Embedded submanifold of R^{n x k}, stored column-stacked as a length n*k
/// vector so that the l1 term and soft-thresholding act entrywise.
///
///   Sphere(n)      k = 1, normal space spanned by x
///   Stiefel(n, r)  k = r, normal space {X S : S symmetric}, d = r(r+1)/2
///   Oblique(n, p)  k = p, p independent unit columns, d = p
///
/// Stiefel(n, 1) and Sphere(n) agree in every operation.
class Manifold {
 public:
  static Manifold sphere(Index n);
  static Manifold stiefel(Index n, Index r);
  static Manifold oblique(Index n, Index p);

  ManifoldKind kind() const { return kind_; }
  Index rows() const { return n_; }
  Index cols() const { return k_; }
  Index ambient_dim() const { return n_ * k_; }
  Index normal_dim() const;
  Index tangent_dim() const { return ambient_dim() - normal_dim(); }
  std::string name() const;

  /// Sphere: |‖x‖-1|. Stiefel: ‖XᵀX - I‖_F. Oblique: max_i |‖x_i‖-1|.
  double feasibility_residual(const Vec& x) const;

  Vec proj_tangent(const Vec& x, const Vec& z) const;
  Vec proj_normal(const Vec& x, const Vec& z) const;

  /// Orthonormal basis B_x of the normal space (ambient_dim x d). For the
  /// Stiefel manifold the columns are vec(X E_k) with E_k running over the
  /// symmetric basis E_11..E_rr, then (e_i e_jᵀ + e_j e_iᵀ)/√2 for i < j in
  /// row-major order.
  Mat normal_basis(const Vec& x) const;

  /// B_xᵀ z without forming B_x.
  Vec normal_coords(const Vec& x, const Vec& z) const;
  /// B_x λ without forming B_x.
  Vec normal_from_coords(const Vec& x, const Vec& lambda) const;

  /// Sphere/oblique: columnwise normalization of x + v. Stiefel: polar factor
  /// of X + V, which equals (X + V)(I + VᵀV)^{-1/2} for tangent V.
  Vec retract(const Vec& x, const Vec& v) const;

  /// Weingarten map W_x(w, u) = D(x -> P_x)(x)[w] u for tangent w and normal
  /// u. Throws PreconditionViolation when u has a tangent component above
  /// 1e-10 ‖u‖.
  Vec weingarten(const Vec& x, const Vec& w, const Vec& u) const;
  /// Same map without the normality check on u.
  Vec weingarten_unchecked(const Vec& x, const Vec& w, const Vec& u) const;

  bool is_tangent(const Vec& x, const Vec& v, double tol = 1e-10) const;

  Vec random_point(std::mt19937_64& rng) const;
  Vec random_tangent(const Vec& x, std::mt19937_64& rng) const;

  /// Reshape helpers for the column-stacked layout.
  Eigen::Map<const Mat> as_matrix(const Vec& x) const;

 private:
  Manifold(ManifoldKind kind, Index n, Index k) : kind_(kind), n_(n), k_(k) {}
  void check_dim(const Vec& z, const char* what) const;

  ManifoldKind kind_;
  Index n_;
  Index k_;
};

/// Symmetric part (A + Aᵀ)/2.
Mat sym(const Mat& a);

}  // namespace manprox
