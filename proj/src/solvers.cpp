#include "manprox/solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace manprox {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Rounding noise in evaluating F(x); below it the Armijo-type test is
// meaningless.
double objective_noise(const Problem& p, const Vec& x) {
  return 1e3 * kEps * (1.0 + std::abs(p.smooth_value(x)) + p.nonsmooth_value(x));
}

std::int64_t elapsed_ns(Clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count();
}

ProxSolution prox_at(const Vec& x, const SolverConfig& cfg, const Problem& problem,
                     const Vec* warm_lambda) {
  return solve_tangent_prox(problem.manifold, x, problem.egrad(x), cfg.t, problem.mu, warm_lambda,
                            cfg.prox);
}

IterationRecord make_record(int k, const Vec& x, const ProxSolution& prox, const Problem& problem,
                            Phase phase) {
  IterationRecord rec;
  rec.k = k;
  rec.objective = problem.objective(x);
  rec.f_noise = objective_noise(problem, x);
  rec.v_norm = prox.v.norm();
  rec.phase = phase;
  rec.inner_iters = prox.inner_iters;
  rec.active = static_cast<Index>(prox.mask.sum());
  rec.mask_hash = mask_hash(prox.mask);
  rec.feasible = problem.manifold.feasibility_residual(x) <= 1e-12 * std::sqrt(static_cast<double>(problem.manifold.cols()));
  return rec;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(rho > 0.0 && rho <= 0.5)) throw PreconditionViolation("rho must lie in (0, 1/2]");
  if (!(t > 0.0)) throw PreconditionViolation("t must be positive");
  if (!(tol_final >= 0.0)) throw PreconditionViolation("tol_final must be >= 0");
  if (!(epsilon > tol_final)) throw PreconditionViolation("epsilon must exceed tol_final");
  if (max_iter < 0) throw PreconditionViolation("max_iter must be >= 0");
}

const char* phase_name(Phase p) { return p == Phase::kNewton ? "newton" : "gradient"; }

std::uint64_t mask_hash(const Vec& mask) {
  std::uint64_t h = 1469598103934665603ULL;
  for (Index i = 0; i < mask.size(); ++i) {
    h ^= mask(i) != 0.0 ? 0x9dULL : 0x31ULL;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Proximal gradient

ManpgStep manpg_step_from(const Vec& x, ProxSolution prox, const SolverConfig& cfg,
                          const Problem& problem) {
  ManpgStep step;
  const double vv = prox.v.squaredNorm();
  step.prox = std::move(prox);
  if (vv == 0.0) {
    step.x_next = x;
    step.alpha = 1.0;
    return step;
  }
  const double f0 = problem.objective(x);
  double alpha = 1.0;
  for (int b = 0;; ++b) {
    Vec trial = problem.manifold.retract(x, alpha * step.prox.v);
    const double f_trial = problem.objective(trial);
    const double target = f0 - 0.5 * alpha * vv;
    if (f_trial <= target) {
      step.x_next = std::move(trial);
      step.alpha = alpha;
      return step;
    }
    if (b == cfg.max_backtracks) {
      // The test is evaluated in floating point; once ½α‖v‖² is below the
      // rounding error of F it can fail for every α. Such a shortfall is
      // accepted as a stalled step; a larger one is a genuine failure.
      if (f_trial - target <= objective_noise(problem, x)) {
        step.x_next = std::move(trial);
        step.alpha = alpha;
        step.stalled = true;
        return step;
      }
      break;
    }
    alpha *= cfg.rho;
  }
  std::ostringstream os;
  os << "line search failed after " << cfg.max_backtracks << " backtracks (‖v‖ = "
     << std::sqrt(vv) << ")";
  throw LineSearchFailure(os.str());
}

ManpgStep manpg_step(const Vec& x, const SolverConfig& cfg, const Problem& problem,
                     const Vec* warm_lambda) {
  return manpg_step_from(x, prox_at(x, cfg, problem, warm_lambda), cfg, problem);
}

// ---------------------------------------------------------------------------
// Proximal Newton

RpnStep rpn_step_from(const Vec& x, ProxSolution prox, const SolverConfig& cfg,
                      const Problem& problem) {
  RpnStep step;
  step.prox = std::move(prox);
  if (step.prox.v.squaredNorm() == 0.0) {
    step.u = Vec::Zero(x.size());
    step.x_next = x;
    return step;
  }
  const NewtonState state = NewtonState::build(
      problem.manifold, x, step.prox, cfg.t,
      [&problem, &x](const Vec& d) { return problem.ehess(x, d); });
  const NewtonSolve solve = solve_newton(state, step.prox.v, cfg.lin);
  step.u = solve.u;
  step.lin_iters = solve.iterations;
  step.x_next = problem.manifold.retract(x, step.u);
  return step;
}

RpnStep rpn_step(const Vec& x, const SolverConfig& cfg, const Problem& problem,
                 const Vec* warm_lambda) {
  return rpn_step_from(x, prox_at(x, cfg, problem, warm_lambda), cfg, problem);
}

// ---------------------------------------------------------------------------
// Naive second-order baseline

NaiveSubproblemSolution solve_naive_subproblem(const Vec& x, const Problem& problem, double sigma,
                                               int max_iter) {
  const Manifold& m = problem.manifold;
  const Index n = m.ambient_dim();
  const Index d = m.normal_dim();
  const double mu = problem.mu;

  // Riemannian Hessian as a dense symmetric ambient operator, H = P Hess P.
  Mat h(n, n);
  for (Index j = 0; j < n; ++j) {
    h.col(j) = problem.rhess(x, m.proj_tangent(x, Vec::Unit(n, j)));
  }
  h = sym(h);
  const Mat q = tangent_basis(m, x);
  Eigen::SelfAdjointEigenSolver<Mat> es(q.transpose() * h * q, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().size() > 0 ? es.eigenvalues().minCoeff() : 1.0;
  if (!(min_eig > 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))) {
    std::ostringstream os;
    os << "tangent-restricted Hessian has eigenvalue " << min_eig;
    throw NonconvexSubproblem(os.str());
  }

  const Mat b = m.normal_basis(x);
  const Vec g = problem.rgrad(x);
  const double tol = 1e-13 * std::sqrt(static_cast<double>(n));

  Vec v = Vec::Zero(n);
  Vec lambda = Vec::Zero(d);
  auto residual = [&](const Vec& vv, const Vec& ll, Vec* w_out) {
    const Vec w = x + vv - sigma * (g + h * vv + b * ll);
    if (w_out != nullptr) *w_out = w;
    const Vec r1 = vv + x - soft_threshold(w, sigma * mu);
    const Vec r2 = b.transpose() * vv;
    return std::sqrt(r1.squaredNorm() + r2.squaredNorm());
  };

  NaiveSubproblemSolution sol;
  Vec w;
  double res = residual(v, lambda, &w);
  int iter = 0;
  while (res > tol && iter < max_iter) {
    ++iter;
    const Vec mask = active_mask(w, sigma * mu);
    std::vector<Index> act;
    std::vector<Index> inact;
    for (Index i = 0; i < n; ++i) (mask(i) != 0.0 ? act : inact).push_back(i);
    const auto na = static_cast<Index>(act.size());

    // Linear piece of G at this mask: v_I = -x_I and, on the active set,
    // (g + H v + B λ)_A + μ sgn(w_A) = 0 together with Bᵀv = 0.
    Vec v_new = Vec::Zero(n);
    for (Index i : inact) v_new(i) = -x(i);
    const Vec hv_inact = h * v_new;
    Mat kkt = Mat::Zero(na + d, na + d);
    Vec rhs(na + d);
    for (Index a = 0; a < na; ++a) {
      const Index i = act[static_cast<std::size_t>(a)];
      for (Index c = 0; c < na; ++c) kkt(a, c) = h(i, act[static_cast<std::size_t>(c)]);
      kkt.block(a, na, 1, d) = b.row(i);
      kkt.block(na, a, d, 1) = b.row(i).transpose();
      rhs(a) = -g(i) - mu * (w(i) > 0.0 ? 1.0 : -1.0) - hv_inact(i);
    }
    rhs.tail(d) = -(b.transpose() * v_new);
    const Vec sol_a = kkt.colPivHouseholderQr().solve(rhs);
    for (Index a = 0; a < na; ++a) v_new(act[static_cast<std::size_t>(a)]) = sol_a(a);
    const Vec lambda_new = sol_a.tail(d);

    // Damped acceptance on ‖G‖.
    const Vec dv = v_new - v;
    const Vec dl = lambda_new - lambda;
    double step = 1.0;
    bool accepted = false;
    for (int k = 0; k <= 30; ++k, step *= 0.5) {
      Vec w_trial;
      const double r_trial = residual(v + step * dv, lambda + step * dl, &w_trial);
      if (r_trial < res) {
        v += step * dv;
        lambda += step * dl;
        res = r_trial;
        w = std::move(w_trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (res > std::max(tol, 1e-10)) {
    std::ostringstream os;
    os << "naive subproblem: semismooth Newton stopped at ‖G‖ = " << res << " after " << iter
       << " iterations";
    throw MaxInnerIterations(os.str());
  }
  sol.v = v;
  sol.lambda = lambda;
  sol.mask = active_mask(w, sigma * mu);
  sol.kkt_residual = res;
  sol.iterations = iter;
  return sol;
}

Vec rpn_naive_step(const Vec& x, const SolverConfig& cfg, const Problem& problem) {
  const NaiveSubproblemSolution sub = solve_naive_subproblem(x, problem, cfg.t);
  return problem.manifold.retract(x, sub.v);
}

// ---------------------------------------------------------------------------
// Drivers

void summarize(ConvergenceTrace& trace) {
  TraceSummary& s = trace.summary;
  s = TraceSummary{};
  if (trace.records.empty()) return;
  const IterationRecord& last = trace.records.back();
  s.iter = last.k;
  s.f = last.objective;
  s.v_norm = last.v_norm;
  // Zeros of x + v at the last record: Newton iterates carry rounding-level
  // entries where the soft-thresholded point is exactly zero.
  if (trace.x_final.size() > 0)
    s.sparsity = 1.0 - static_cast<double>(last.active) / static_cast<double>(trace.x_final.size());

  if (trace.algorithm == "manpg") {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : trace.records) best = std::min(best, r.v_norm);
    if (best > 0.0 && std::isfinite(best)) {
      const double threshold = std::pow(10.0, std::floor(std::log10(best)) + 1.0);
      for (const auto& r : trace.records) {
        if (r.v_norm < threshold) {
          s.iter_v = r.k;
          break;
        }
      }
    } else {
      s.iter_v = 0;
    }
  }
  if (trace.algorithm == "rpn" || trace.algorithm == "rpn-g") {
    int count = 0;
    for (const auto& r : trace.records) count += r.used_newton ? 1 : 0;
    s.iter_u = count;
  }
}

ConvergenceTrace run_manpg(const Vec& x0, const SolverConfig& cfg, const Problem& problem) {
  cfg.validate();
  ConvergenceTrace trace;
  trace.algorithm = "manpg";
  Vec x = x0;
  Vec warm;
  try {
    for (int k = 0;; ++k) {
      const auto start = Clock::now();
      ProxSolution prox = prox_at(x, cfg, problem, warm.size() ? &warm : nullptr);
      IterationRecord rec = make_record(k, x, prox, problem, Phase::kGradient);
      if (rec.v_norm <= cfg.tol_final || k >= cfg.max_iter) {
        trace.converged = rec.v_norm <= cfg.tol_final;
        rec.wall_ns = elapsed_ns(start);
        trace.records.push_back(rec);
        break;
      }
      warm = prox.lambda;
      ManpgStep step = manpg_step_from(x, std::move(prox), cfg, problem);
      rec.alpha = step.alpha;
      rec.wall_ns = elapsed_ns(start);
      trace.records.push_back(rec);
      x = std::move(step.x_next);
    }
  } catch (const Error& e) {
    trace.error = e.what();
  }
  trace.x_final = x;
  summarize(trace);
  return trace;
}

ConvergenceTrace run_rpn(const Vec& x0, const SolverConfig& cfg, const Problem& problem) {
  cfg.validate();
  ConvergenceTrace trace;
  trace.algorithm = "rpn";
  Vec x = x0;
  Vec warm;
  try {
    for (int k = 0;; ++k) {
      const auto start = Clock::now();
      ProxSolution prox = prox_at(x, cfg, problem, warm.size() ? &warm : nullptr);
      IterationRecord rec = make_record(k, x, prox, problem, Phase::kNewton);
      if (rec.v_norm <= cfg.tol_final || k >= cfg.max_iter) {
        trace.converged = rec.v_norm <= cfg.tol_final;
        rec.wall_ns = elapsed_ns(start);
        trace.records.push_back(rec);
        break;
      }
      warm = prox.lambda;
      trace.records.push_back(rec);
      RpnStep step = rpn_step_from(x, std::move(prox), cfg, problem);
      IterationRecord& back = trace.records.back();
      back.alpha = 1.0;
      back.lin_iters = step.lin_iters;
      back.used_newton = true;
      back.wall_ns = elapsed_ns(start);
      x = std::move(step.x_next);
    }
  } catch (const Error& e) {
    trace.error = e.what();
  }
  trace.x_final = x;
  summarize(trace);
  return trace;
}

ConvergenceTrace run_rpn_g(const Vec& x0, const SolverConfig& cfg, const Problem& problem) {
  cfg.validate();
  if (!(cfg.epsilon > 0.0)) throw PreconditionViolation("rpn-g: epsilon must be positive");
  ConvergenceTrace trace;
  trace.algorithm = "rpn-g";
  Vec x = x0;
  Vec warm;
  Phase phase = Phase::kGradient;
  std::optional<ProxSolution> cached;  // prox at x carried over from a Newton step
  // After a rejected Newton step, retry only once ‖v‖ has halved.
  double retry_below = std::numeric_limits<double>::infinity();
  try {
    for (int k = 0;; ++k) {
      const auto start = Clock::now();
      ProxSolution prox = cached ? std::move(*cached) : prox_at(x, cfg, problem, warm.size() ? &warm : nullptr);
      cached.reset();
      const double v_norm = prox.v.norm();
      if (phase == Phase::kGradient && v_norm <= cfg.epsilon) phase = Phase::kNewton;
      IterationRecord rec = make_record(k, x, prox, problem, phase);
      if (v_norm <= cfg.tol_final || k >= cfg.max_iter) {
        trace.converged = v_norm <= cfg.tol_final;
        rec.wall_ns = elapsed_ns(start);
        trace.records.push_back(rec);
        break;
      }
      warm = prox.lambda;

      if (phase == Phase::kNewton) {
        bool newton_ok = false;
        if (v_norm <= retry_below) {
          try {
            RpnStep step = rpn_step_from(x, prox, cfg, problem);
            ProxSolution next = prox_at(step.x_next, cfg, problem, &warm);
            if (next.v.norm() <= cfg.newton_inflation_limit * v_norm) {
              rec.alpha = 1.0;
              rec.lin_iters = step.lin_iters;
              rec.used_newton = true;
              x = std::move(step.x_next);
              cached = std::move(next);
              newton_ok = true;
              retry_below = std::numeric_limits<double>::infinity();
            }
          } catch (const Error&) {
            newton_ok = false;
          }
          if (!newton_ok) retry_below = 0.5 * v_norm;
        }
        if (!newton_ok) {
          ManpgStep step = manpg_step_from(x, std::move(prox), cfg, problem);
          rec.alpha = step.alpha;
          rec.fallback = true;
          x = std::move(step.x_next);
        }
      } else {
        ManpgStep step = manpg_step_from(x, std::move(prox), cfg, problem);
        rec.alpha = step.alpha;
        x = std::move(step.x_next);
      }
      rec.wall_ns = elapsed_ns(start);
      trace.records.push_back(rec);
    }
  } catch (const Error& e) {
    trace.error = e.what();
  }
  trace.x_final = x;
  summarize(trace);
  return trace;
}

ConvergenceTrace run_rpn_naive(const Vec& x0, const SolverConfig& cfg, const Problem& problem) {
  cfg.validate();
  ConvergenceTrace trace;
  trace.algorithm = "rpn-n";
  Vec x = x0;
  Vec warm;
  try {
    for (int k = 0;; ++k) {
      const auto start = Clock::now();
      // ‖v(x_k)‖ of the proximal gradient subproblem is the common
      // stationarity measure across algorithms.
      ProxSolution prox = prox_at(x, cfg, problem, warm.size() ? &warm : nullptr);
      IterationRecord rec = make_record(k, x, prox, problem, Phase::kNewton);
      if (rec.v_norm <= cfg.tol_final || k >= cfg.max_iter) {
        trace.converged = rec.v_norm <= cfg.tol_final;
        rec.wall_ns = elapsed_ns(start);
        trace.records.push_back(rec);
        break;
      }
      warm = prox.lambda;
      const NaiveSubproblemSolution sub = solve_naive_subproblem(x, problem, cfg.t);
      rec.alpha = 1.0;
      rec.lin_iters = sub.iterations;
      rec.wall_ns = elapsed_ns(start);
      trace.records.push_back(rec);
      x = problem.manifold.retract(x, sub.v);
    }
  } catch (const Error& e) {
    trace.error = e.what();
  }
  trace.x_final = x;
  summarize(trace);
  return trace;
}

Vec warm_start_manpg(const Vec& x0, const SolverConfig& cfg, const Problem& problem,
                     double threshold) {
  Vec x = x0;
  Vec warm;
  for (int k = 0; k <= cfg.max_iter; ++k) {
    ProxSolution prox = prox_at(x, cfg, problem, warm.size() ? &warm : nullptr);
    if (prox.v.norm() <= threshold) return x;
    warm = prox.lambda;
    x = manpg_step_from(x, std::move(prox), cfg, problem).x_next;
  }
  std::ostringstream os;
  os << "warm start did not reach ‖v‖ <= " << threshold << " within " << cfg.max_iter
     << " iterations";
  throw Error(os.str());
}

}  // namespace manprox
