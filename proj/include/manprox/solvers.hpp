#pragma once

#include "manprox/newton_operator.hpp"
#include "manprox/problems.hpp"
#include "manprox/prox.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace manprox {

struct SolverConfig {
  double t = 1.0;
  double rho = 0.5;
  /// Switch threshold on ‖v_k‖ between the gradient and Newton phases.
  double epsilon = 1e-4;
  double tol_final = 1e-12;
  int max_iter = 3000;
  int max_backtracks = 50;
  std::uint64_t seed = 0;
  /// Newton-phase safeguard: a Newton step whose successor has ‖v‖ larger
  /// than this factor times the current ‖v‖ is replaced by a gradient step.
  double newton_inflation_limit = 10.0;
  ProxOptions prox;
  LinearSolveOptions lin;

  /// Throws PreconditionViolation unless rho ∈ (0, 1/2], t > 0 and
  /// epsilon > tol_final >= 0.
  void validate() const;
};

enum class Phase { kGradient, kNewton };
const char* phase_name(Phase p);

struct IterationRecord {
  int k = 0;
  double objective = 0.0;  // F(x_k)
  double v_norm = 0.0;     // ‖v(x_k)‖, measured before stepping
  double alpha = 0.0;      // step taken from x_k (0 on the terminal record)
  double f_noise = 0.0;    // rounding scale of F(x_k)
  Phase phase = Phase::kGradient;
  int inner_iters = 0;
  int lin_iters = 0;
  std::int64_t wall_ns = 0;
  Index active = 0;             // nonzeros of the active mask
  std::uint64_t mask_hash = 0;  // FNV-1a of the mask pattern
  bool used_newton = false;     // the step from x_k used the direction u_k
  bool fallback = false;        // Newton step rejected, gradient step taken
  bool feasible = true;
};

struct TraceSummary {
  int iter = 0;
  std::optional<int> iter_v;
  std::optional<int> iter_u;
  double f = 0.0;
  double sparsity = 0.0;  // fraction of zeros of x + v at the last record
  double v_norm = 0.0;
};

struct ConvergenceTrace {
  std::string algorithm;
  std::vector<IterationRecord> records;
  Vec x_final;
  TraceSummary summary;
  bool converged = false;
  std::optional<std::string> error;
};

struct ManpgStep {
  Vec x_next;
  ProxSolution prox;
  double alpha = 1.0;
  /// The Armijo-type test was never met, and the last trial was accepted
  /// because the shortfall is within the rounding noise of F.
  bool stalled = false;
};

/// One proximal gradient step: v from the tangent prox, then backtracking
/// α ∈ {1, ρ, ρ², ...} until F(R_x(αv)) <= F(x) - α‖v‖²/2.
ManpgStep manpg_step(const Vec& x, const SolverConfig& cfg, const Problem& problem,
                     const Vec* warm_lambda = nullptr);
/// Same, reusing a prox solution already computed at x.
ManpgStep manpg_step_from(const Vec& x, ProxSolution prox, const SolverConfig& cfg,
                          const Problem& problem);

struct RpnStep {
  Vec x_next;
  ProxSolution prox;
  Vec u;
  int lin_iters = 0;
};

/// One proximal Newton step: x_next = R_x(u) with J(x)[u] = -v(x), unit step.
RpnStep rpn_step(const Vec& x, const SolverConfig& cfg, const Problem& problem,
                 const Vec* warm_lambda = nullptr);
RpnStep rpn_step_from(const Vec& x, ProxSolution prox, const SolverConfig& cfg,
                      const Problem& problem);

struct NaiveSubproblemSolution {
  Vec v;
  Vec lambda;
  Vec mask;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Solves min_{v ∈ T_x M} <grad f, v> + <v, Hess f(x)[v]>/2 + μ‖x + v‖₁ by
/// semismooth Newton on
///   G(v, λ) = [v + x - prox_{σh}(x + v - σ(grad f + Hess f[v] + B λ)); Bᵀv].
/// Throws NonconvexSubproblem when Hess f(x) is not positive definite on T_x M.
NaiveSubproblemSolution solve_naive_subproblem(const Vec& x, const Problem& problem, double sigma,
                                               int max_iter = 100);

/// One step of the naive baseline: x_next = R_x(v_naive).
Vec rpn_naive_step(const Vec& x, const SolverConfig& cfg, const Problem& problem);

/// Proximal gradient until max_iter (or ‖v‖ <= tol_final).
ConvergenceTrace run_manpg(const Vec& x0, const SolverConfig& cfg, const Problem& problem);
/// Pure proximal Newton iteration from x0 until ‖v‖ <= tol_final or max_iter.
ConvergenceTrace run_rpn(const Vec& x0, const SolverConfig& cfg, const Problem& problem);
/// Gradient phase until ‖v‖ <= epsilon, then Newton phase with per-step
/// fallback to a gradient step.
ConvergenceTrace run_rpn_g(const Vec& x0, const SolverConfig& cfg, const Problem& problem);
/// Naive second-order baseline.
ConvergenceTrace run_rpn_naive(const Vec& x0, const SolverConfig& cfg, const Problem& problem);

/// Runs proximal gradient steps until ‖v‖ <= threshold (warm start for run_rpn).
/// Returns the reached point; throws LineSearchFailure or if max_iter is hit.
Vec warm_start_manpg(const Vec& x0, const SolverConfig& cfg, const Problem& problem,
                     double threshold);

/// Fills trace.summary from the records and the final point.
void summarize(ConvergenceTrace& trace);

std::uint64_t mask_hash(const Vec& mask);

}  // namespace manprox
