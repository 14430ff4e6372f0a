#include "output.hpp"

#include <charconv>
#include <cmath>

namespace manprox::app {

namespace {

template <class T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string optional_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

SummaryRow average_summary(const std::string& algo, Index n, Index r, double mu,
                           const std::vector<const ConvergenceTrace*>& traces) {
  SummaryRow row;
  row.algo = algo;
  row.n = n;
  row.r = r;
  row.mu = mu;
  double iter_v = 0.0;
  double iter_u = 0.0;
  int count_v = 0;
  int count_u = 0;
  for (const ConvergenceTrace* t : traces) {
    if (t->error || t->records.empty()) continue;
    const TraceSummary& s = t->summary;
    ++row.runs;
    row.iter += s.iter;
    row.f += s.f;
    row.sparsity += s.sparsity;
    row.v_norm += s.v_norm;
    if (s.iter_v) {
      iter_v += *s.iter_v;
      ++count_v;
    }
    if (s.iter_u) {
      iter_u += *s.iter_u;
      ++count_u;
    }
  }
  if (row.runs == 0) return row;
  const double runs = row.runs;
  row.iter /= runs;
  row.f /= runs;
  row.sparsity /= runs;
  row.v_norm /= runs;
  if (count_v > 0) row.iter_v = iter_v / count_v;
  if (count_u > 0) row.iter_u = iter_u / count_u;
  return row;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << kSummaryHeader << '\n';
  for (const SummaryRow& r : rows) {
    if (r.runs == 0) continue;
    os << r.algo << ',' << r.n << ',' << r.r << ',' << format_double(r.mu) << ','
       << format_double(r.iter) << ',' << optional_cell(r.iter_v) << ','
       << optional_cell(r.iter_u) << ',' << format_double(r.f) << ','
       << format_double(r.sparsity) << ',' << format_double(r.v_norm) << '\n';
  }
}

nlohmann::json record_json(const IterationRecord& r, const std::string& algo, std::uint64_t seed) {
  return {{"algo", algo},
          {"seed", seed},
          {"k", r.k},
          {"objective", r.objective},
          {"v_norm", r.v_norm},
          {"alpha", r.alpha},
          {"phase", phase_name(r.phase)},
          {"inner_iters", r.inner_iters},
          {"lin_iters", r.lin_iters},
          {"active", r.active},
          {"mask_hash", r.mask_hash},
          {"used_newton", r.used_newton},
          {"fallback", r.fallback},
          {"feasible", r.feasible},
          {"wall_ns", r.wall_ns}};
}

void write_trace_jsonl(std::ostream& os, const ConvergenceTrace& trace, std::uint64_t seed) {
  for (const IterationRecord& r : trace.records)
    os << record_json(r, trace.algorithm, seed).dump() << '\n';
}

void write_compare_csv(std::ostream& os, const std::vector<const ConvergenceTrace*>& traces) {
  os << kCompareHeader << '\n';
  for (const ConvergenceTrace* t : traces) {
    std::int64_t elapsed = 0;
    for (const IterationRecord& r : t->records) {
      const char* phase = r.fallback ? "fallback" : phase_name(r.phase);
      os << t->algorithm << ',' << r.k << ',' << format_double(r.v_norm) << ','
         << format_double(static_cast<double>(elapsed) * 1e-9) << ',' << phase << '\n';
      elapsed += r.wall_ns;
    }
  }
}

nlohmann::json rate_json(const RateEstimate& e) {
  return {{"slope", e.slope},
          {"tail_len", e.tail_len},
          {"classification", rate_class_name(e.classification)}};
}

nlohmann::json audit_json(const TraceAudit& a) {
  return {{"ok", a.ok},
          {"descent_violations", a.descent_violations},
          {"infeasible", a.infeasible},
          {"first_violation", optional_json(a.first_violation)},
          {"message", a.message}};
}

nlohmann::json summary_json(const TraceSummary& s) {
  return {{"iter", s.iter},
          {"iter_v", optional_json(s.iter_v)},
          {"iter_u", optional_json(s.iter_u)},
          {"f", s.f},
          {"sparsity", s.sparsity},
          {"v_norm", s.v_norm}};
}

}  // namespace manprox::app
