#pragma once

#include "manprox/solvers.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace manprox::app {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One layer of settings; unset fields fall through to the next layer.
struct Settings {
  std::optional<std::string> problem;
  std::optional<std::vector<std::string>> algos;
  std::optional<Index> m;
  std::optional<Index> n;
  std::optional<Index> r;
  std::optional<double> mu;
  std::optional<double> t;
  std::optional<double> rho;
  std::optional<double> epsilon;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::string> out;
  std::optional<std::string> data;
  std::optional<std::string> point;
  std::optional<std::string> format;
};

/// Fields of `high` win over fields of `low`.
Settings merge(const Settings& high, const Settings& low);

/// Flat TOML table with the flag names as keys (dashes or underscores).
Settings load_toml(const std::string& path);
Settings parse_toml(std::string_view text);

/// "5" means seeds 0..4; "3,7,9" is an explicit list.
std::vector<std::uint64_t> parse_seeds(const std::string& text);
std::vector<std::string> parse_algos(const std::string& text);

enum class ProblemKind { kRandom, kHandcrafted, kSynthetic };
ProblemKind parse_problem(const std::string& name);
const char* problem_name(ProblemKind p);

struct RunSpec {
  ProblemKind problem = ProblemKind::kRandom;
  std::vector<std::string> algos{"rpn-g"};
  Index m = 50;
  Index n = 1000;
  Index r = 1;
  double mu = 0.8;
  /// Step parameter; 1/(2‖A‖₂²) per instance when unset.
  std::optional<double> t;
  SolverConfig cfg;
  std::vector<std::uint64_t> seeds{0};
  std::string out;
  std::string data;
  std::string point;
  std::string format = "csv";

  /// Throws ConfigError on an inconsistent spec.
  void validate() const;
};

/// Applies the problem-specific defaults and then the merged settings.
RunSpec resolve(const Settings& s);

/// Registers the shared flags on a subcommand, writing into `s` only for
/// flags that are given. `config_path` receives --config.
void add_common_flags(CLI::App& cmd, Settings& s, std::string& config_path);

}  // namespace manprox::app
