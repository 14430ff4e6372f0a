#include "manprox/prox.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace manprox {

Vec soft_threshold(const Vec& z, double tau) {
  if (!(tau >= 0.0)) throw PreconditionViolation("soft_threshold: tau must be >= 0");
  Vec out(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    const double a = std::abs(z(i)) - tau;
    out(i) = a > 0.0 ? std::copysign(a, z(i)) : 0.0;
  }
  return out;
}

Vec active_mask(const Vec& z, double tau) {
  Vec mask(z.size());
  for (Index i = 0; i < z.size(); ++i) mask(i) = std::abs(z(i)) > tau ? 1.0 : 0.0;
  return mask;
}

Vec active_mask(const Manifold& m, const Vec& x, const Vec& egrad, const Vec& lambda, double t,
                double mu) {
  const Vec z = x - t * (egrad + m.normal_from_coords(x, lambda));
  return active_mask(z, t * mu);
}

namespace {

// Evaluation of the multiplier equation at one λ.
struct PsiEval {
  Vec z;
  Vec w;  // soft_threshold(z, tμ) = x + v
  Vec psi;
  double norm = 0.0;
};

class MultiplierEquation {
 public:
  MultiplierEquation(const Manifold& m, const Vec& x, const Vec& egrad, double t, double mu)
      : m_(m), x_(x), t_(t), mu_(mu), basis_(m.normal_basis(x)), shifted_(x - t * egrad) {}

  PsiEval eval(const Vec& lambda) const {
    PsiEval e;
    e.z = shifted_ - t_ * (basis_ * lambda);
    e.w = soft_threshold(e.z, t_ * mu_);
    e.psi = basis_.transpose() * (e.w - x_);
    e.norm = e.psi.norm();
    return e;
  }

  // t B_xᵀ M B_x at the mask of z.
  Mat jacobian(const Vec& z) const {
    const Vec mask = active_mask(z, t_ * mu_);
    return t_ * (basis_.transpose() * mask.asDiagonal() * basis_);
  }

  // Exact maximization of the concave dual along λ + s δ. The derivative
  // s -> Ψ(λ + s δ)ᵀ δ is nonincreasing, so bisection on its sign suffices.
  double dual_line_search(const Vec& lambda, const Vec& delta) const {
    auto slope = [&](double s) { return eval(lambda + s * delta).psi.dot(delta); };
    double lo = 0.0;
    double hi = 1.0;
    while (slope(hi) > 0.0 && hi < 1e30) {
      lo = hi;
      hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-16 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (slope(mid) > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  const Mat& basis() const { return basis_; }

 private:
  const Manifold& m_;
  const Vec& x_;
  double t_;
  double mu_;
  Mat basis_;
  Vec shifted_;
};

}  // namespace

Vec prox_multiplier_residual(const Manifold& m, const Vec& x, const Vec& egrad, double t,
                             double mu, const Vec& lambda) {
  return MultiplierEquation(m, x, egrad, t, mu).eval(lambda).psi;
}

double prox_dual_value(const Manifold& m, const Vec& x, const Vec& egrad, double t, double mu,
                       const Vec& lambda) {
  const Vec shifted = egrad + m.normal_from_coords(x, lambda);
  const Vec w = soft_threshold(x - t * shifted, t * mu);
  const Vec v = w - x;
  return shifted.dot(v) + v.squaredNorm() / (2.0 * t) + mu * w.lpNorm<1>();
}

ProxSolution solve_tangent_prox(const Manifold& m, const Vec& x, const Vec& egrad, double t,
                                double mu, const Vec* warm_lambda, const ProxOptions& opts) {
  if (!(t > 0.0)) throw PreconditionViolation("solve_tangent_prox: t must be positive");
  if (!(mu >= 0.0)) throw PreconditionViolation("solve_tangent_prox: mu must be >= 0");
  if (egrad.size() != m.ambient_dim()) throw DimensionMismatch("solve_tangent_prox: gradient size");

  const Index d = m.normal_dim();
  const double tol =
      opts.tol >= 0.0 ? opts.tol : 1e-13 * std::sqrt(static_cast<double>(m.ambient_dim()));
  MultiplierEquation eq(m, x, egrad, t, mu);

  Vec lambda = Vec::Zero(d);
  if (warm_lambda != nullptr && warm_lambda->size() == d) lambda = *warm_lambda;

  ProxSolution sol;
  PsiEval cur = eq.eval(lambda);
  sol.residual_history.push_back(cur.norm);
  int iter = 0;
  bool converged = cur.norm <= tol;
  while (!converged && iter < opts.max_iter) {
    ++iter;
    const double sigma = std::max(1e-12, 1e-10 * cur.norm);
    Mat jac = eq.jacobian(cur.z);
    jac.diagonal().array() += sigma;
    const Vec delta = jac.ldlt().solve(cur.psi);

    bool accepted = false;
    double step = 1.0;
    for (int b = 0; b <= opts.max_backtracks; ++b, step *= 0.5) {
      PsiEval trial = eq.eval(lambda + step * delta);
      if (trial.norm < cur.norm) {
        lambda += step * delta;
        cur = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (cur.norm <= opts.floor_tol) {
        // Roundoff floor: no step reduces ‖Ψ‖ any further.
        converged = true;
        break;
      }
      // Flat or overshooting merit (e.g. an empty mask): maximize the dual
      // along δ instead.
      const Vec dir = delta.dot(cur.psi) > 0.0 ? delta : cur.psi;
      const double s = eq.dual_line_search(lambda, dir);
      lambda += s * dir;
      cur = eq.eval(lambda);
    }
    sol.residual_history.push_back(cur.norm);
    converged = cur.norm <= tol;
  }
  // Once the mask is settled Ψ is affine in λ, so a further full step lands
  // at rounding level; v then carries no inner-solve error into the outer rate.
  for (int polish = 0; converged && polish < 2 && cur.norm > 0.0; ++polish) {
    Mat jac = eq.jacobian(cur.z);
    jac.diagonal().array() += 1e-12;
    const Vec next = lambda + jac.ldlt().solve(cur.psi);
    PsiEval trial = eq.eval(next);
    if (!(trial.norm < 0.5 * cur.norm)) break;
    lambda = next;
    cur = std::move(trial);
    sol.residual_history.push_back(cur.norm);
  }
  if (!converged) {
    std::ostringstream os;
    os << "semismooth Newton stopped after " << iter << " iterations with ‖Ψ‖ = " << cur.norm
       << " (tolerance " << tol << ")";
    throw MaxInnerIterations(os.str());
  }

  sol.v = cur.w - x;
  sol.lambda = lambda;
  sol.mask = active_mask(cur.z, t * mu);
  sol.residual = cur.norm;
  sol.inner_iters = iter;
  return sol;
}

}  // namespace manprox
