#include "manprox/problems.hpp"

#include <random>

namespace manprox {

namespace {

constexpr Index kGramCacheMaxN = 2000;

double squared_spectral_norm(const Mat& a) {
  const Mat small = a.rows() <= a.cols() ? Mat(a * a.transpose()) : Mat(a.transpose() * a);
  Eigen::SelfAdjointEigenSolver<Mat> es(small, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

SparsePcaObjective::SparsePcaObjective(Mat a, Index r) : a_(std::move(a)), r_(r) {
  if (r_ < 1 || r_ > a_.cols()) throw PreconditionViolation("sparse PCA: need 1 <= r <= n");
  if (a_.cols() <= kGramCacheMaxN) gram_ = a_.transpose() * a_;
  spectral_norm_sq_ = squared_spectral_norm(a_);
}

Mat SparsePcaObjective::gram_times(const Mat& x) const {
  if (gram_) return *gram_ * x;
  return a_.transpose() * (a_ * x);
}

double SparsePcaObjective::value(const Vec& x) const {
  if (x.size() != ambient_dim()) throw DimensionMismatch("sparse PCA: point size");
  Eigen::Map<const Mat> X(x.data(), a_.cols(), r_);
  return -(a_ * X).squaredNorm();
}

Vec SparsePcaObjective::gradient(const Vec& x) const {
  if (x.size() != ambient_dim()) throw DimensionMismatch("sparse PCA: point size");
  Eigen::Map<const Mat> X(x.data(), a_.cols(), r_);
  Mat g = -2.0 * gram_times(X);
  return Eigen::Map<const Vec>(g.data(), g.size());
}

Vec SparsePcaObjective::hessian_action(const Vec& /*x*/, const Vec& d) const {
  if (d.size() != ambient_dim()) throw DimensionMismatch("sparse PCA: direction size");
  Eigen::Map<const Mat> D(d.data(), a_.cols(), r_);
  Mat h = -2.0 * gram_times(D);
  return Eigen::Map<const Vec>(h.data(), h.size());
}

Vec Problem::rgrad(const Vec& x) const { return manifold.proj_tangent(x, egrad(x)); }

Vec Problem::rhess(const Vec& x, const Vec& eta) const {
  const Vec g = egrad(x);
  return manifold.proj_tangent(x, ehess(x, eta)) +
         manifold.weingarten_unchecked(x, eta, manifold.proj_normal(x, g));
}

Problem make_sparse_pca(Mat a, Index r, double mu) {
  const Index n = a.cols();
  auto f = std::make_shared<SparsePcaObjective>(std::move(a), r);
  Manifold m = r == 1 ? Manifold::sphere(n) : Manifold::stiefel(n, r);
  return Problem{m, std::move(f), mu};
}

double default_step(const SparsePcaObjective& f) { return 1.0 / (2.0 * f.spectral_norm_sq()); }

double default_step(const Problem& p) {
  const auto* spca = dynamic_cast<const SparsePcaObjective*>(p.f.get());
  if (spca == nullptr) throw PreconditionViolation("default_step: not a sparse PCA problem");
  return default_step(*spca);
}

Mat gen_random(Index m, Index n, std::uint64_t seed) {
  if (m < 1 || n < 1) throw PreconditionViolation("gen_random: need m, n >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat a(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = normal(rng);
  return a;
}

Mat standardize_columns(Mat a) {
  for (Index j = 0; j < a.cols(); ++j) {
    a.col(j).array() -= a.col(j).mean();
    const double norm = a.col(j).norm();
    if (norm > 0.0) a.col(j) /= norm;
  }
  return a;
}

HandcraftedInstance gen_handcrafted(std::uint64_t seed, double noise) {
  Mat sigma_ut = Mat::Zero(3, 6);
  sigma_ut(0, 0) = 20.0;
  sigma_ut(1, 1) = 0.1;
  sigma_ut(2, 2) = 0.05;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  HandcraftedInstance inst;
  inst.a = sigma_ut;
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 6; ++j) inst.a(i, j) += noise * normal(rng);

  inst.x_star_noise_free = Vec::Unit(6, 0);
  Vec x0 = inst.x_star_noise_free;
  for (Index i = 0; i < 6; ++i) x0(i) += noise * normal(rng);
  inst.x0 = x0 / x0.norm();
  return inst;
}

Mat synthetic_components(Index n) {
  // Box and step patterns on the index line, positions as fractions of n.
  struct Segment {
    double from;
    double to;
    double value;
  };
  const std::vector<std::vector<Segment>> patterns = {
      {{0.00, 0.10, 1.0}},
      {{0.08, 0.20, 1.0}},
      {{0.25, 0.35, 1.0}, {0.35, 0.45, 0.5}},
      {{0.50, 0.60, -1.0}},
      {{0.70, 0.75, 1.0}, {0.85, 0.90, 1.0}},
  };
  Mat pcs = Mat::Zero(5, n);
  for (Index k = 0; k < 5; ++k) {
    for (const Segment& s : patterns[static_cast<std::size_t>(k)]) {
      const auto lo = static_cast<Index>(s.from * static_cast<double>(n));
      const auto hi = static_cast<Index>(s.to * static_cast<double>(n));
      for (Index j = lo; j < hi && j < n; ++j) pcs(k, j) = s.value;
    }
  }
  return pcs;
}

Mat gen_synthetic(Index m, Index n, std::uint64_t seed, double noise_sd) {
  if (m < 5 || m % 5 != 0) throw PreconditionViolation("gen_synthetic: m must be a positive multiple of 5");
  if (n < 1) throw PreconditionViolation("gen_synthetic: n must be >= 1");
  const Mat pcs = synthetic_components(n);
  const Index block = m / 5;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat a(m, n);
  for (Index i = 0; i < m; ++i) {
    a.row(i) = pcs.row(i / block);
    if (noise_sd != 0.0)
      for (Index j = 0; j < n; ++j) a(i, j) += noise_sd * normal(rng);
  }
  return a;
}

double sparsity(const Vec& x) {
  if (x.size() == 0) return 0.0;
  return static_cast<double>((x.array() == 0.0).count()) / static_cast<double>(x.size());
}

}  // namespace manprox
