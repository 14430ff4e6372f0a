#pragma once

#include "manprox/solvers.hpp"

#include <optional>
#include <span>
#include <string>

namespace manprox {

/// ‖v(x)‖ from a fresh subproblem solve.
double check_stationarity(const Vec& x, const Problem& problem, double t);

struct RankCheck {
  bool ok = false;
  double sigma_min = 0.0;
  Index active_rows = 0;  // j
};

/// Smallest singular value of the rows of B_x selected by the mask; ok iff
/// j >= d and σ_min > 1e-10.
RankCheck check_assumption_rank(const Manifold& m, const Vec& x, const Vec& mask);

struct SecondOrderCheck {
  bool psd = false;
  /// +∞ when the null space of B̄ᵀ is trivial.
  double min_eig = 0.0;
  Index null_dim = 0;
  /// Set when min_eig > 1e-8: whether the dense J(x) on T_x M is nonsingular.
  std::optional<bool> j_nonsingular;
  double j_sigma_min = 0.0;
};

/// Restricts H¹¹ - L¹¹ (active block of ∇²f minus the Weingarten term with
/// B_x λ) to null(B̄ᵀ) and reports its smallest eigenvalue; psd iff
/// min_eig >= -1e-8. Throws PreconditionViolation unless ‖v‖ <= 1e-8.
SecondOrderCheck check_second_order(const Vec& x, const Problem& problem, const ProxSolution& prox,
                                    double t);

enum class RateClass { kQuadratic, kSuperlinear, kLinear, kInsufficient };
const char* rate_class_name(RateClass c);

struct RateEstimate {
  double slope = 0.0;
  int tail_len = 0;  // number of ‖v‖ samples in the regression
  RateClass classification = RateClass::kInsufficient;
};

struct RateOptions {
  /// Samples at or below this are rounding noise and are left out.
  double floor = 1e-14;
  /// At most this many trailing samples enter the fit.
  int max_samples = 7;
};

/// Least-squares slope of log v_{k+1} against log v_k over the trailing
/// samples above the floor. Needs at least 3 samples; slope >= 1.8 is
/// quadratic, > 1.2 superlinear, otherwise linear.
RateEstimate estimate_rate(std::span<const double> v_norms, const RateOptions& opts = {});
/// Same over the trailing Newton-phase records of a trace that are not
/// fallback gradient steps.
RateEstimate estimate_rate(const ConvergenceTrace& trace, const RateOptions& opts = {});

/// First Newton-phase iteration whose active mask differs from its
/// predecessor's, if any.
std::optional<int> first_mask_change(const ConvergenceTrace& trace);

struct TraceAudit {
  bool ok = true;
  int descent_violations = 0;
  int infeasible = 0;
  std::optional<int> first_violation;
  std::string message;
};

/// Checks that every gradient step satisfies F(x_{k+1}) <= F(x_k) - α‖v_k‖²/2
/// up to the rounding noise of F, and that every iterate is feasible.
TraceAudit audit_trace(const ConvergenceTrace& trace);

}  // namespace manprox
