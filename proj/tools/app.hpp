#pragma once

#include "config.hpp"
#include "output.hpp"

#include <iosfwd>
#include <optional>

namespace manprox::app {

struct Instance {
  Problem problem;
  Vec x0;
  SolverConfig cfg;  // t filled in
};

/// Data matrix of the spec for one seed (or the --data file).
Mat build_data(const RunSpec& spec, std::uint64_t seed);
/// Problem, starting point and solver settings for one seed. Random and
/// synthetic data are column-standardized; x0 is a uniform point on the
/// manifold drawn from a stream separate from the data.
Instance build_instance(const RunSpec& spec, std::uint64_t seed);

/// "rpn" first runs proximal gradient steps down to ‖v‖ <= epsilon.
ConvergenceTrace run_algorithm(const std::string& algo, const Instance& inst);

struct SeedRun {
  std::uint64_t seed = 0;
  ConvergenceTrace trace;
  RateEstimate rate;
  TraceAudit audit;
  std::optional<int> first_mask_change;
};

/// Parallel seeds, capped by MANPROX_THREADS; results in seed order.
std::vector<SeedRun> run_seeds(const RunSpec& spec, const std::string& algo);
int thread_cap();

nlohmann::json seed_json(const SeedRun& run);

/// Subcommands; return the process exit code.
int cmd_run(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_compare(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_check(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_gen_data(const RunSpec& spec, std::ostream& out, std::ostream& err);

/// Full command line entry point.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace manprox::app
