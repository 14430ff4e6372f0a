#include "manprox/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace manprox {

namespace {

std::vector<Index> active_rows(const Vec& mask) {
  std::vector<Index> rows;
  for (Index i = 0; i < mask.size(); ++i)
    if (mask(i) != 0.0) rows.push_back(i);
  return rows;
}

Mat select_rows(const Mat& b, const std::vector<Index>& rows) {
  Mat out(static_cast<Index>(rows.size()), b.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = b.row(rows[k]);
  return out;
}

}  // namespace

double check_stationarity(const Vec& x, const Problem& problem, double t) {
  return solve_tangent_prox(problem.manifold, x, problem.egrad(x), t, problem.mu).v.norm();
}

RankCheck check_assumption_rank(const Manifold& m, const Vec& x, const Vec& mask) {
  if (mask.size() != m.ambient_dim()) throw DimensionMismatch("rank check: mask size");
  RankCheck out;
  const auto rows = active_rows(mask);
  out.active_rows = static_cast<Index>(rows.size());
  if (out.active_rows < m.normal_dim()) return out;
  const Mat bbar = select_rows(m.normal_basis(x), rows);
  Eigen::JacobiSVD<Mat> svd(bbar);
  out.sigma_min = svd.singularValues().minCoeff();
  out.ok = out.sigma_min > 1e-10;
  return out;
}

SecondOrderCheck check_second_order(const Vec& x, const Problem& problem, const ProxSolution& prox,
                                    double t) {
  if (!(prox.v.norm() <= 1e-8)) {
    std::ostringstream os;
    os << "second-order check needs ‖v‖ <= 1e-8, got " << prox.v.norm();
    throw PreconditionViolation(os.str());
  }
  const Manifold& m = problem.manifold;
  const Mat b = m.normal_basis(x);
  const auto rows = active_rows(prox.mask);
  const Mat bbar = select_rows(b, rows);

  SecondOrderCheck out;
  Mat z_active;
  if (!rows.empty()) {
    Eigen::JacobiSVD<Mat> svd(bbar, Eigen::ComputeFullU);
    const Index rank = (svd.singularValues().array() > 1e-10).count();
    z_active = svd.matrixU().rightCols(bbar.rows() - rank);
  }
  out.null_dim = z_active.cols();
  if (out.null_dim == 0) {
    out.min_eig = std::numeric_limits<double>::infinity();
    out.psd = true;
  } else {
    Mat z = Mat::Zero(m.ambient_dim(), out.null_dim);
    for (std::size_t k = 0; k < rows.size(); ++k) z.row(rows[k]) = z_active.row(static_cast<Index>(k));
    const Vec normal = b * prox.lambda;
    Mat kz(m.ambient_dim(), out.null_dim);
    for (Index c = 0; c < out.null_dim; ++c) {
      const Vec zc = z.col(c);
      kz.col(c) = problem.ehess(x, zc) - m.weingarten_unchecked(x, zc, normal);
    }
    const Mat k = sym(z.transpose() * kz);
    Eigen::SelfAdjointEigenSolver<Mat> es(k, Eigen::EigenvaluesOnly);
    out.min_eig = es.eigenvalues().minCoeff();
    out.psd = out.min_eig >= -1e-8;
  }

  if (out.min_eig > 1e-8) {
    const NewtonState state = NewtonState::build(
        m, x, prox, t, [&problem, &x](const Vec& d) { return problem.ehess(x, d); });
    const Mat q = tangent_basis(m, x);
    const Mat jq = materialize_tangent_operator(state, q);
    if (jq.size() == 0) {
      out.j_nonsingular = true;
      out.j_sigma_min = std::numeric_limits<double>::infinity();
    } else {
      Eigen::JacobiSVD<Mat> svd(jq);
      const auto& s = svd.singularValues();
      out.j_sigma_min = s.minCoeff();
      out.j_nonsingular = out.j_sigma_min > 1e-12 * std::max(1.0, s.maxCoeff());
    }
  }
  return out;
}

const char* rate_class_name(RateClass c) {
  switch (c) {
    case RateClass::kQuadratic:
      return "quadratic";
    case RateClass::kSuperlinear:
      return "superlinear";
    case RateClass::kLinear:
      return "linear";
    case RateClass::kInsufficient:
      break;
  }
  return "insufficient";
}

RateEstimate estimate_rate(std::span<const double> v_norms, const RateOptions& opts) {
  // Trailing run of samples above the floor.
  std::vector<double> logs;
  for (double v : v_norms) {
    if (v > opts.floor && std::isfinite(v)) logs.push_back(std::log10(v));
  }
  if (static_cast<int>(logs.size()) > opts.max_samples) {
    logs.erase(logs.begin(), logs.end() - opts.max_samples);
  }
  RateEstimate est;
  est.tail_len = static_cast<int>(logs.size());
  if (est.tail_len < 3) return est;

  const std::size_t pairs = logs.size() - 1;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    mx += logs[i];
    my += logs[i + 1];
  }
  mx /= static_cast<double>(pairs);
  my /= static_cast<double>(pairs);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    sxx += (logs[i] - mx) * (logs[i] - mx);
    sxy += (logs[i] - mx) * (logs[i + 1] - my);
  }
  if (sxx <= 0.0) {
    est.tail_len = 0;
    return est;
  }
  est.slope = sxy / sxx;
  if (est.slope >= 1.8) {
    est.classification = RateClass::kQuadratic;
  } else if (est.slope > 1.2) {
    est.classification = RateClass::kSuperlinear;
  } else {
    est.classification = RateClass::kLinear;
  }
  return est;
}

RateEstimate estimate_rate(const ConvergenceTrace& trace, const RateOptions& opts) {
  // Trailing run of Newton-phase records not produced by a fallback step.
  std::vector<double> v;
  for (auto it = trace.records.rbegin(); it != trace.records.rend(); ++it) {
    if (it->phase != Phase::kNewton || it->fallback) break;
    v.push_back(it->v_norm);
  }
  std::reverse(v.begin(), v.end());
  return estimate_rate(std::span<const double>(v), opts);
}

std::optional<int> first_mask_change(const ConvergenceTrace& trace) {
  const IterationRecord* prev = nullptr;
  for (const auto& r : trace.records) {
    if (r.phase != Phase::kNewton) continue;
    if (prev != nullptr && r.mask_hash != prev->mask_hash) return r.k;
    prev = &r;
  }
  return std::nullopt;
}

TraceAudit audit_trace(const ConvergenceTrace& trace) {
  TraceAudit audit;
  std::ostringstream os;
  auto flag = [&](int k, const std::string& what) {
    audit.ok = false;
    if (!audit.first_violation) audit.first_violation = k;
    if (audit.message.empty()) {
      os << "k=" << k << ": " << what;
      audit.message = os.str();
    }
  };
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const IterationRecord& r = trace.records[i];
    if (!r.feasible) {
      ++audit.infeasible;
      flag(r.k, "infeasible iterate");
    }
    if (i + 1 >= trace.records.size() || r.used_newton || r.alpha <= 0.0) continue;
    const IterationRecord& next = trace.records[i + 1];
    const double bound = r.objective - 0.5 * r.alpha * r.v_norm * r.v_norm + 2.0 * r.f_noise;
    if (next.objective > bound) {
      ++audit.descent_violations;
      flag(r.k, "descent condition violated");
    }
  }
  return audit;
}

}  // namespace manprox
