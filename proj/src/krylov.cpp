#include "manprox/krylov.hpp"

#include <cmath>

namespace manprox {

KrylovResult cgs(const std::function<Vec(const Vec&)>& apply, const Vec& b, double tol,
                 int max_iter) {
  KrylovResult res;
  res.x = Vec::Zero(b.size());
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }

  Vec r = b;
  const Vec r_tilde = b;
  Vec u, p, q = Vec::Zero(b.size());
  double rho_prev = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    const double rho = r_tilde.dot(r);
    if (std::abs(rho) <= 1e-30 * bnorm * r.norm()) {
      res.breakdown = true;
      break;
    }
    if (it == 0) {
      u = r;
      p = u;
    } else {
      const double beta = rho / rho_prev;
      u = r + beta * q;
      p = u + beta * (q + beta * p);
    }
    const Vec v_hat = apply(p);
    const double sigma = r_tilde.dot(v_hat);
    if (sigma == 0.0 || !std::isfinite(sigma)) {
      res.breakdown = true;
      break;
    }
    const double alpha = rho / sigma;
    q = u - alpha * v_hat;
    const Vec u_hat = u + q;
    res.x += alpha * u_hat;
    r -= alpha * apply(u_hat);
    rho_prev = rho;
    res.iterations = it + 1;
    if (!r.allFinite()) {
      res.breakdown = true;
      break;
    }
    if (r.norm() <= tol * bnorm) {
      // Recurrence residuals drift; confirm with the true residual.
      r = b - apply(res.x);
      if (r.norm() <= tol * bnorm) {
        res.converged = true;
        break;
      }
    }
  }
  res.rel_residual = (b - apply(res.x)).norm() / bnorm;
  res.converged = res.converged || res.rel_residual <= tol;
  return res;
}

KrylovResult minres(const std::function<Vec(const Vec&)>& apply, const Vec& b, double tol,
                    int max_iter) {
  KrylovResult res;
  const Index n = b.size();
  res.x = Vec::Zero(n);
  const double beta1 = b.norm();
  if (beta1 == 0.0) {
    res.converged = true;
    return res;
  }

  // Lanczos three-term recurrence with a QR update of the tridiagonal.
  Vec r1 = b;
  Vec r2 = b;
  Vec y = b;
  Vec w = Vec::Zero(n);
  Vec w1 = Vec::Zero(n);
  Vec w2 = Vec::Zero(n);
  double beta = beta1;
  double oldb = 0.0;
  double dbar = 0.0;
  double epsln = 0.0;
  double phibar = beta1;
  double cs = -1.0;
  double sn = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    const Vec v = y / beta;
    y = apply(v);
    if (it >= 2) y -= (beta / oldb) * r1;
    const double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    oldb = beta;
    beta = y.norm();

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), 1e-300);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar *= sn;

    w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    res.x += phi * w;
    res.iterations = it;
    if (!res.x.allFinite()) {
      res.breakdown = true;
      break;
    }
    if (phibar <= tol * beta1 || beta == 0.0) {
      if ((b - apply(res.x)).norm() <= tol * beta1) {
        res.converged = true;
        break;
      }
      if (beta == 0.0) break;
    }
  }
  res.rel_residual = (b - apply(res.x)).norm() / beta1;
  res.converged = res.converged || res.rel_residual <= tol;
  return res;
}

}  // namespace manprox
