#include "manprox/newton_operator.hpp"

#include "manprox/krylov.hpp"

#include <sstream>

namespace manprox {

NewtonState NewtonState::build(const Manifold& m, const Vec& x, const ProxSolution& prox,
                               double t, HessianAction ehess) {
  NewtonState s(m);
  s.x_ = x;
  s.basis_ = m.normal_basis(x);
  s.mask_ = prox.mask;
  s.lambda_ = prox.lambda;
  s.normal_multiplier_ = m.normal_from_coords(x, prox.lambda);
  s.t_ = t;
  s.ehess_ = std::move(ehess);

  const Mat gram = s.basis_.transpose() * s.mask_.asDiagonal() * s.basis_;
  Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
  s.gram_min_eig_ = es.eigenvalues().minCoeff();
  if (!(s.gram_min_eig_ > 1e-12)) {
    std::ostringstream os;
    os << "B_xᵀ M B_x is not positive definite (smallest eigenvalue " << s.gram_min_eig_
       << ", " << s.mask_.sum() << " active of " << s.mask_.size() << ")";
    throw AssumptionViolation(os.str());
  }
  s.gram_.compute(gram);
  if (s.gram_.info() != Eigen::Success) throw AssumptionViolation("Cholesky of B_xᵀ M B_x failed");
  return s;
}

Vec NewtonState::apply_lambda(const Vec& w) const {
  const Vec mw = mask_.cwiseProduct(w);
  const Vec coeff = gram_.solve(basis_.transpose() * mw);
  return mw - mask_.cwiseProduct(basis_ * coeff);
}

Vec NewtonState::apply_curvature(const Vec& omega) const {
  return ehess_(omega) - m_.weingarten_unchecked(x_, omega, normal_multiplier_);
}

Vec NewtonState::apply(const Vec& omega) const {
  const Vec w = m_.proj_tangent(x_, omega);
  const Vec out = -(w - apply_lambda(w) + t_ * apply_lambda(apply_curvature(w)));
  return m_.proj_tangent(x_, out);
}

Mat tangent_basis(const Manifold& m, const Vec& x) {
  const Mat b = m.normal_basis(x);
  Eigen::HouseholderQR<Mat> qr(b);
  const Mat q = qr.householderQ();
  return q.rightCols(m.tangent_dim());
}

Mat materialize_tangent_operator(const NewtonState& state, const Mat& q) {
  Mat jq(q.rows(), q.cols());
  for (Index j = 0; j < q.cols(); ++j) jq.col(j) = state.apply(q.col(j));
  return q.transpose() * jq;
}

Vec solve_newton_dense(const NewtonState& state, const Vec& v) {
  const Manifold& m = state.manifold();
  const Mat q = tangent_basis(m, state.point());
  const Mat k = materialize_tangent_operator(state, q);
  Eigen::FullPivLU<Mat> lu(k);
  if (!lu.isInvertible()) throw KrylovBreakdown("J(x) is singular on the tangent space");
  const Vec y = lu.solve(-(q.transpose() * v));
  return q * y;
}

NewtonSolve solve_newton(const NewtonState& state, const Vec& v, const LinearSolveOptions& opts) {
  const Manifold& m = state.manifold();
  const Vec& x = state.point();
  const Vec b = -m.proj_tangent(x, v);
  NewtonSolve out;
  if (b.norm() == 0.0) {
    out.u = Vec::Zero(b.size());
    return out;
  }

  const KrylovResult kr =
      cgs([&state](const Vec& w) { return state.apply(w); }, b, opts.tol, opts.max_iter);
  out.iterations = kr.iterations;
  if (kr.converged) {
    out.u = m.proj_tangent(x, kr.x);
    out.rel_residual = kr.rel_residual;
    return out;
  }
  // Reduced symmetric route.
  const Vec vt = -b;
  const Vec u2 = vt - state.apply_lambda(vt);
  const Vec rhs = state.apply_lambda(vt - state.t() * state.apply_curvature(u2));
  const double t = state.t();
  const KrylovResult mr = minres(
      [&state, &m, &x, t](const Vec& w) {
        return state.apply_lambda(t * state.apply_curvature(m.proj_tangent(x, state.apply_lambda(w))));
      },
      rhs, 0.1 * opts.tol, opts.reduced_max_iter);
  out.iterations += mr.iterations;
  if (!mr.breakdown) {
    const Vec u = m.proj_tangent(x, state.apply_lambda(mr.x) + u2);
    const double rel = (state.apply(u) - b).norm() / b.norm();
    if (rel <= opts.tol) {
      out.u = u;
      out.used_reduced = true;
      out.rel_residual = rel;
      return out;
    }
  }
  if (opts.allow_dense_fallback && m.tangent_dim() <= opts.dense_fallback_dim) {
    out.u = solve_newton_dense(state, v);
    out.used_dense = true;
    out.rel_residual = (state.apply(out.u) - b).norm() / b.norm();
    return out;
  }
  std::ostringstream os;
  os << "CGS and MINRES did not converge after " << out.iterations
     << " iterations (relative residuals " << kr.rel_residual << ", " << mr.rel_residual << ")";
  if (kr.breakdown) throw KrylovBreakdown(os.str());
  throw MaxLinIterations(os.str());
}

}  // namespace manprox
