#pragma once

#include "manprox/manifold.hpp"

#include <cstdint>
#include <memory>
#include <optional>

namespace manprox {

/// Smooth part f of F = f + μ‖·‖₁, evaluated on column-stacked ambient vectors.
class SmoothObjective {
 public:
  virtual ~SmoothObjective() = default;
  virtual Index ambient_dim() const = 0;
  virtual double value(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;
  virtual Vec hessian_action(const Vec& x, const Vec& d) const = 0;
};

/// f(X) = -trace(Xᵀ AᵀA X) for X of size n x r.
/// ∇f(X) = -2 AᵀA X and ∇²f(X)[V] = -2 AᵀA V. The Gram matrix is cached only
/// when n <= 2000; otherwise products go through A(A · ).
class SparsePcaObjective final : public SmoothObjective {
 public:
  SparsePcaObjective(Mat a, Index r);

  Index ambient_dim() const override { return a_.cols() * r_; }
  double value(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  Vec hessian_action(const Vec& x, const Vec& d) const override;

  const Mat& data() const { return a_; }
  Index r() const { return r_; }
  bool has_gram() const { return gram_.has_value(); }
  /// ‖A‖₂², the squared spectral norm.
  double spectral_norm_sq() const { return spectral_norm_sq_; }

 private:
  Mat gram_times(const Mat& x) const;

  Mat a_;
  Index r_;
  std::optional<Mat> gram_;
  double spectral_norm_sq_;
};

/// Composite problem min_{x ∈ M} f(x) + μ‖x‖₁.
struct Problem {
  Manifold manifold;
  std::shared_ptr<const SmoothObjective> f;
  double mu = 0.0;

  double smooth_value(const Vec& x) const { return f->value(x); }
  double nonsmooth_value(const Vec& x) const { return mu * x.lpNorm<1>(); }
  double objective(const Vec& x) const { return f->value(x) + nonsmooth_value(x); }
  Vec egrad(const Vec& x) const { return f->gradient(x); }
  Vec ehess(const Vec& x, const Vec& d) const { return f->hessian_action(x, d); }
  /// Riemannian gradient P_x ∇f(x).
  Vec rgrad(const Vec& x) const;
  /// Riemannian Hessian P_x ∇²f[η] + W_x(η, P_x^⊥ ∇f) for tangent η.
  Vec rhess(const Vec& x, const Vec& eta) const;
};

/// Sparse PCA on Stiefel(n, r) (the sphere when r = 1).
Problem make_sparse_pca(Mat a, Index r, double mu);

/// Step parameter t = 1 / (2‖A‖₂²).
double default_step(const SparsePcaObjective& f);
double default_step(const Problem& p);

/// i.i.d. N(0, 1) matrix, reproducible per seed.
Mat gen_random(Index m, Index n, std::uint64_t seed);

/// Centers every column and scales it to unit ℓ2 norm (zero columns stay zero).
Mat standardize_columns(Mat a);

struct HandcraftedInstance {
  Mat a;   // 3 x 6
  Vec x0;  // on Sphere(6)
  Vec x_star_noise_free;
};

/// A = Σ Uᵀ + noise R₁ with Σ = diag(20, 0.1, 0.05), U = [I₃; 0₃], and
/// x0 = normalize(e₁ + noise R₂); R₁, R₂ i.i.d. N(0, 1).
HandcraftedInstance gen_handcrafted(std::uint64_t seed, double noise = 0.1);

/// Defaults for the handcrafted instance. x0 already lies in the local
/// region, so the Newton phase starts at once.
inline constexpr double kHandcraftedMu = 1.0;
inline constexpr double kHandcraftedEpsilon = 1.0;

/// The five fixed component patterns (5 x n) behind gen_synthetic.
Mat synthetic_components(Index n);

/// Each component row repeated m/5 times plus N(0, noise_sd²) entries
/// (noise_sd = 0.5 gives variance 0.25). Throws when m is not divisible by 5.
Mat gen_synthetic(Index m, Index n, std::uint64_t seed, double noise_sd = 0.5);

/// Fraction of exactly-zero entries.
double sparsity(const Vec& x);

}  // namespace manprox
