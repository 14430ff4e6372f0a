#pragma once

#include "manprox/diagnostics.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace manprox::app {

inline constexpr const char* kSummaryHeader = "algo,n,r,mu,iter,iter_v,iter_u,f,sparsity,v_norm";
inline constexpr const char* kCompareHeader = "algo,k,v_norm,cpu_seconds,phase";

/// One row of the summary table, averaged over the seeds that finished.
struct SummaryRow {
  std::string algo;
  Index n = 0;
  Index r = 0;
  double mu = 0.0;
  double iter = 0.0;
  std::optional<double> iter_v;
  std::optional<double> iter_u;
  double f = 0.0;
  double sparsity = 0.0;
  double v_norm = 0.0;
  int runs = 0;
};

/// Averages the summaries of the traces without an error. `runs` is 0 when
/// every trace failed.
SummaryRow average_summary(const std::string& algo, Index n, Index r, double mu,
                           const std::vector<const ConvergenceTrace*>& traces);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double x);

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

nlohmann::json record_json(const IterationRecord& r, const std::string& algo, std::uint64_t seed);
/// One JSON object per record, newline-terminated.
void write_trace_jsonl(std::ostream& os, const ConvergenceTrace& trace, std::uint64_t seed);

/// Long-format rows for every record of every trace. cpu_seconds is the
/// wall time spent before x_k was available; phase is "gradient", "newton"
/// or "fallback" (a rejected Newton step replaced by a gradient step).
void write_compare_csv(std::ostream& os, const std::vector<const ConvergenceTrace*>& traces);

nlohmann::json rate_json(const RateEstimate& e);
nlohmann::json audit_json(const TraceAudit& a);
nlohmann::json summary_json(const TraceSummary& s);

}  // namespace manprox::app
