#include "manprox/manifold.hpp"

#include <cmath>
#include <sstream>

namespace manprox {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;

// Coordinates of a symmetric r x r matrix in the orthonormal basis
// {E_ii} ∪ {(e_i e_jᵀ + e_j e_iᵀ)/√2 : i < j}.
Vec sym_to_coords(const Mat& s) {
  const Index r = s.rows();
  Vec c(r * (r + 1) / 2);
  Index k = 0;
  for (Index i = 0; i < r; ++i) c(k++) = s(i, i);
  for (Index i = 0; i < r; ++i)
    for (Index j = i + 1; j < r; ++j) c(k++) = (s(i, j) + s(j, i)) * kInvSqrt2;
  return c;
}

Mat coords_to_sym(const Vec& c, Index r) {
  Mat s = Mat::Zero(r, r);
  Index k = 0;
  for (Index i = 0; i < r; ++i) s(i, i) = c(k++);
  for (Index i = 0; i < r; ++i)
    for (Index j = i + 1; j < r; ++j) {
      s(i, j) = s(j, i) = c(k++) * kInvSqrt2;
    }
  return s;
}

}  // namespace

Mat sym(const Mat& a) { return 0.5 * (a + a.transpose()); }

Manifold Manifold::sphere(Index n) {
  if (n < 1) throw PreconditionViolation("sphere: n must be >= 1");
  return Manifold(ManifoldKind::kSphere, n, 1);
}

Manifold Manifold::stiefel(Index n, Index r) {
  if (r < 1 || n < r) throw PreconditionViolation("stiefel: need 1 <= r <= n");
  return Manifold(ManifoldKind::kStiefel, n, r);
}

Manifold Manifold::oblique(Index n, Index p) {
  if (n < 1 || p < 1) throw PreconditionViolation("oblique: need n, p >= 1");
  return Manifold(ManifoldKind::kOblique, n, p);
}

Index Manifold::normal_dim() const {
  switch (kind_) {
    case ManifoldKind::kSphere:
      return 1;
    case ManifoldKind::kStiefel:
      return k_ * (k_ + 1) / 2;
    case ManifoldKind::kOblique:
      return k_;
  }
  return 0;
}

std::string Manifold::name() const {
  std::ostringstream os;
  switch (kind_) {
    case ManifoldKind::kSphere:
      os << "Sphere(" << n_ << ")";
      break;
    case ManifoldKind::kStiefel:
      os << "Stiefel(" << n_ << "," << k_ << ")";
      break;
    case ManifoldKind::kOblique:
      os << "Oblique(" << n_ << "," << k_ << ")";
      break;
  }
  return os.str();
}

void Manifold::check_dim(const Vec& z, const char* what) const {
  if (z.size() != ambient_dim()) {
    std::ostringstream os;
    os << name() << ": " << what << " has length " << z.size() << ", expected "
       << ambient_dim();
    throw DimensionMismatch(os.str());
  }
}

Eigen::Map<const Mat> Manifold::as_matrix(const Vec& x) const {
  return Eigen::Map<const Mat>(x.data(), n_, k_);
}

double Manifold::feasibility_residual(const Vec& x) const {
  check_dim(x, "point");
  ConstMatMap X(x.data(), n_, k_);
  if (kind_ == ManifoldKind::kStiefel) {
    return (X.transpose() * X - Mat::Identity(k_, k_)).norm();
  }
  double worst = 0.0;
  for (Index j = 0; j < k_; ++j) worst = std::max(worst, std::abs(X.col(j).norm() - 1.0));
  return worst;
}

Vec Manifold::normal_coords(const Vec& x, const Vec& z) const {
  check_dim(x, "point");
  check_dim(z, "vector");
  ConstMatMap X(x.data(), n_, k_);
  ConstMatMap Z(z.data(), n_, k_);
  if (kind_ == ManifoldKind::kStiefel) return sym_to_coords(X.transpose() * Z);
  Vec c(k_);
  for (Index j = 0; j < k_; ++j) c(j) = X.col(j).dot(Z.col(j));
  return c;
}

Vec Manifold::normal_from_coords(const Vec& x, const Vec& lambda) const {
  check_dim(x, "point");
  if (lambda.size() != normal_dim()) throw DimensionMismatch("normal coordinates have wrong length");
  ConstMatMap X(x.data(), n_, k_);
  Vec out(ambient_dim());
  MatMap O(out.data(), n_, k_);
  if (kind_ == ManifoldKind::kStiefel) {
    O = X * coords_to_sym(lambda, k_);
  } else {
    for (Index j = 0; j < k_; ++j) O.col(j) = lambda(j) * X.col(j);
  }
  return out;
}

Mat Manifold::normal_basis(const Vec& x) const {
  check_dim(x, "point");
  const Index d = normal_dim();
  Mat b(ambient_dim(), d);
  Vec e = Vec::Zero(d);
  for (Index k = 0; k < d; ++k) {
    e.setZero();
    e(k) = 1.0;
    b.col(k) = normal_from_coords(x, e);
  }
  return b;
}

Vec Manifold::proj_normal(const Vec& x, const Vec& z) const {
  return normal_from_coords(x, normal_coords(x, z));
}

Vec Manifold::proj_tangent(const Vec& x, const Vec& z) const { return z - proj_normal(x, z); }

bool Manifold::is_tangent(const Vec& x, const Vec& v, double tol) const {
  return normal_coords(x, v).norm() <= tol * (1.0 + v.norm());
}

Vec Manifold::retract(const Vec& x, const Vec& v) const {
  check_dim(x, "point");
  check_dim(v, "tangent vector");
  Vec y = x + v;
  MatMap Y(y.data(), n_, k_);
  if (kind_ == ManifoldKind::kStiefel) {
    // Polar factor Y (YᵀY)^{-1/2}; YᵀY = I + VᵀV when V is tangent.
    Eigen::SelfAdjointEigenSolver<Mat> es(Y.transpose() * Y);
    const Vec inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
    const Mat q = es.eigenvectors();
    Mat polar = Y * (q * inv_sqrt.asDiagonal() * q.transpose());
    Y = polar;
  } else {
    for (Index j = 0; j < k_; ++j) Y.col(j) /= Y.col(j).norm();
  }
  return y;
}

Vec Manifold::weingarten_unchecked(const Vec& x, const Vec& w, const Vec& u) const {
  check_dim(x, "point");
  check_dim(w, "tangent vector");
  check_dim(u, "normal vector");
  ConstMatMap X(x.data(), n_, k_);
  ConstMatMap W(w.data(), n_, k_);
  ConstMatMap U(u.data(), n_, k_);
  Vec out(ambient_dim());
  MatMap O(out.data(), n_, k_);
  if (kind_ == ManifoldKind::kStiefel) {
    // D(P_X)[W] U = -W sym(XᵀU) - X sym(WᵀU); the second term is normal.
    O = -W * sym(X.transpose() * U);
  } else {
    for (Index j = 0; j < k_; ++j) O.col(j) = -W.col(j) * X.col(j).dot(U.col(j));
  }
  return proj_tangent(x, out);
}

Vec Manifold::weingarten(const Vec& x, const Vec& w, const Vec& u) const {
  check_dim(u, "normal vector");
  if (proj_tangent(x, u).norm() > 1e-10 * u.norm()) {
    throw PreconditionViolation("weingarten: u is not a normal vector");
  }
  return weingarten_unchecked(x, w, u);
}

Vec Manifold::random_point(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec z(ambient_dim());
  for (Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  if (kind_ == ManifoldKind::kStiefel) {
    Eigen::HouseholderQR<Mat> qr(Eigen::Map<const Mat>(z.data(), n_, k_));
    Mat q = qr.householderQ() * Mat::Identity(n_, k_);
    return Eigen::Map<const Vec>(q.data(), ambient_dim());
  }
  return retract(Vec::Zero(ambient_dim()), z);
}

Vec Manifold::random_tangent(const Vec& x, std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec z(ambient_dim());
  for (Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  return proj_tangent(x, z);
}

}  // namespace manprox
