#include "config.hpp"

#include "manprox/matrix_io.hpp"
#include "manprox/problems.hpp"

#include <tomlplusplus/toml.hpp>

#include <algorithm>
#include <fstream>
#include <memory>
#include <sstream>

namespace manprox::app {

namespace {

template <class T>
void take(std::optional<T>& dst, const std::optional<T>& high, const std::optional<T>& low) {
  dst = high ? high : low;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

double as_double(const toml::node& node, const std::string& key) {
  if (auto v = node.value<double>()) return *v;
  throw ConfigError("config key '" + key + "' must be a number");
}

std::int64_t as_int(const toml::node& node, const std::string& key) {
  if (auto v = node.as_integer()) return v->get();
  throw ConfigError("config key '" + key + "' must be an integer");
}

std::string as_string(const toml::node& node, const std::string& key) {
  if (auto v = node.as_string()) return v->get();
  throw ConfigError("config key '" + key + "' must be a string");
}

Index as_dim(const toml::node& node, const std::string& key) {
  const auto v = as_int(node, key);
  if (v <= 0) throw ConfigError("config key '" + key + "' must be positive");
  return static_cast<Index>(v);
}

}  // namespace

Settings merge(const Settings& high, const Settings& low) {
  Settings s;
  take(s.problem, high.problem, low.problem);
  take(s.algos, high.algos, low.algos);
  take(s.m, high.m, low.m);
  take(s.n, high.n, low.n);
  take(s.r, high.r, low.r);
  take(s.mu, high.mu, low.mu);
  take(s.t, high.t, low.t);
  take(s.rho, high.rho, low.rho);
  take(s.epsilon, high.epsilon, low.epsilon);
  take(s.tol, high.tol, low.tol);
  take(s.max_iter, high.max_iter, low.max_iter);
  take(s.seeds, high.seeds, low.seeds);
  take(s.out, high.out, low.out);
  take(s.data, high.data, low.data);
  take(s.point, high.point, low.point);
  take(s.format, high.format, low.format);
  return s;
}

Settings parse_toml(std::string_view text) {
  toml::table table;
  try {
    table = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config parse error at line " << e.source().begin.line << ": " << e.description();
    throw ConfigError(os.str());
  }
  Settings s;
  for (const auto& [k, node] : table) {
    const std::string key = normalize_key(std::string(k.str()));
    if (key == "problem") {
      s.problem = as_string(node, key);
    } else if (key == "algo" || key == "algos") {
      if (const auto* arr = node.as_array()) {
        std::vector<std::string> algos;
        for (const auto& item : *arr) algos.push_back(as_string(item, key));
        s.algos = algos;
      } else {
        s.algos = parse_algos(as_string(node, key));
      }
    } else if (key == "m") {
      s.m = as_dim(node, key);
    } else if (key == "n") {
      s.n = as_dim(node, key);
    } else if (key == "r") {
      s.r = as_dim(node, key);
    } else if (key == "mu") {
      s.mu = as_double(node, key);
    } else if (key == "t") {
      s.t = as_double(node, key);
    } else if (key == "rho") {
      s.rho = as_double(node, key);
    } else if (key == "epsilon") {
      s.epsilon = as_double(node, key);
    } else if (key == "tol") {
      s.tol = as_double(node, key);
    } else if (key == "max_iter") {
      s.max_iter = static_cast<int>(as_int(node, key));
    } else if (key == "seeds") {
      if (const auto* arr = node.as_array()) {
        std::vector<std::uint64_t> seeds;
        for (const auto& item : *arr) {
          const auto v = as_int(item, key);
          if (v < 0) throw ConfigError("seeds must be non-negative");
          seeds.push_back(static_cast<std::uint64_t>(v));
        }
        s.seeds = seeds;
      } else if (node.is_integer()) {
        s.seeds = parse_seeds(std::to_string(as_int(node, key)));
      } else {
        s.seeds = parse_seeds(as_string(node, key));
      }
    } else if (key == "out") {
      s.out = as_string(node, key);
    } else if (key == "data") {
      s.data = as_string(node, key);
    } else if (key == "point") {
      s.point = as_string(node, key);
    } else if (key == "format") {
      s.format = as_string(node, key);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return s;
}

Settings load_toml(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str());
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  const std::string s = trim(text);
  if (s.empty()) throw ConfigError("empty seed list");
  std::vector<std::uint64_t> seeds;
  auto parse_one = [](const std::string& item) {
    const std::string v = trim(item);
    std::size_t pos = 0;
    unsigned long long out = 0;
    try {
      if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
      out = std::stoull(v, &pos);
    } catch (const std::exception&) {
      throw ConfigError("invalid seed '" + v + "'");
    }
    if (pos != v.size()) throw ConfigError("invalid seed '" + v + "'");
    return static_cast<std::uint64_t>(out);
  };
  if (s.find(',') == std::string::npos) {
    const std::uint64_t count = parse_one(s);
    if (count == 0) throw ConfigError("seed count must be positive");
    for (std::uint64_t i = 0; i < count; ++i) seeds.push_back(i);
    return seeds;
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) seeds.push_back(parse_one(item));
  return seeds;
}

std::vector<std::string> parse_algos(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw ConfigError("empty algorithm list");
  return out;
}

ProblemKind parse_problem(const std::string& name) {
  if (name == "random") return ProblemKind::kRandom;
  if (name == "handcrafted") return ProblemKind::kHandcrafted;
  if (name == "synthetic") return ProblemKind::kSynthetic;
  throw ConfigError("unknown problem '" + name + "' (random, handcrafted, synthetic)");
}

const char* problem_name(ProblemKind p) {
  switch (p) {
    case ProblemKind::kHandcrafted:
      return "handcrafted";
    case ProblemKind::kSynthetic:
      return "synthetic";
    case ProblemKind::kRandom:
      break;
  }
  return "random";
}

void RunSpec::validate() const {
  static const std::vector<std::string> known{"manpg", "rpn", "rpn-g", "rpn-n"};
  if (algos.empty()) throw ConfigError("no algorithm given");
  for (const auto& a : algos) {
    if (std::find(known.begin(), known.end(), a) == known.end())
      throw ConfigError("unknown algorithm '" + a + "' (manpg, rpn, rpn-g, rpn-n)");
    if (a == "rpn-n" && r != 1) throw ConfigError("rpn-n needs r = 1");
  }
  if (seeds.empty()) throw ConfigError("seed list is empty");
  if (m <= 0 || n <= 0 || r <= 0) throw ConfigError("m, n and r must be positive");
  if (r > n) throw ConfigError("r must not exceed n");
  if (problem == ProblemKind::kHandcrafted && data.empty() && (n != 6 || m != 3 || r != 1))
    throw ConfigError("the handcrafted instance is fixed at m = 3, n = 6, r = 1");
  if (problem == ProblemKind::kSynthetic && data.empty() && m % 5 != 0)
    throw ConfigError("synthetic data needs m divisible by 5");
  if (!(mu >= 0.0)) throw ConfigError("mu must be >= 0");
  if (t && !(*t > 0.0)) throw ConfigError("t must be positive");
  if (format != "csv" && format != "bin") throw ConfigError("format must be csv or bin");
  try {
    SolverConfig c = cfg;
    c.t = t.value_or(1.0);
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

RunSpec resolve(const Settings& s) {
  RunSpec spec;
  if (s.problem) spec.problem = parse_problem(*s.problem);
  if (spec.problem == ProblemKind::kHandcrafted) {
    spec.m = 3;
    spec.n = 6;
    spec.mu = kHandcraftedMu;
    spec.cfg.epsilon = kHandcraftedEpsilon;
  } else if (spec.problem == ProblemKind::kSynthetic) {
    spec.m = 400;
    spec.n = 4000;
    spec.mu = 1.2;
  }
  if (s.algos) spec.algos = *s.algos;
  if (s.m) spec.m = *s.m;
  if (s.n) spec.n = *s.n;
  if (s.r) spec.r = *s.r;
  if (s.mu) spec.mu = *s.mu;
  spec.t = s.t;
  if (s.rho) spec.cfg.rho = *s.rho;
  if (s.epsilon) spec.cfg.epsilon = *s.epsilon;
  if (s.tol) spec.cfg.tol_final = *s.tol;
  if (s.max_iter) spec.cfg.max_iter = *s.max_iter;
  if (s.seeds) spec.seeds = *s.seeds;
  if (s.out) spec.out = *s.out;
  if (s.data) {
    // The file fixes the dimensions.
    spec.data = *s.data;
    Mat a;
    try {
      a = read_matrix(spec.data);
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
    if ((s.m && *s.m != a.rows()) || (s.n && *s.n != a.cols()))
      throw ConfigError("--m/--n disagree with the data file");
    spec.m = a.rows();
    spec.n = a.cols();
  }
  if (s.point) spec.point = *s.point;
  if (s.format) spec.format = *s.format;
  spec.validate();
  return spec;
}

void add_common_flags(CLI::App& cmd, Settings& s, std::string& config_path) {
  // Each flag writes into the layer only when given on the command line.
  auto text = [&cmd](const char* name, const char* help, auto setter) {
    auto holder = std::make_shared<std::string>();
    cmd.add_option(name, *holder, help)->each([holder, setter](const std::string& v) {
      setter(v);
    });
  };
  auto number = [](const std::string& v, const char* what) {
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(what);
      return d;
    } catch (const std::exception&) {
      throw CLI::ValidationError(std::string(what), "not a number: " + v);
    }
  };
  auto integer = [](const std::string& v, const char* what) {
    try {
      std::size_t pos = 0;
      const long long i = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(what);
      return i;
    } catch (const std::exception&) {
      throw CLI::ValidationError(std::string(what), "not an integer: " + v);
    }
  };
  cmd.add_option("--config", config_path, "TOML file with defaults for these flags");
  text("--problem", "random | handcrafted | synthetic", [&s](const std::string& v) { s.problem = v; });
  text("--algo", "manpg | rpn | rpn-g | rpn-n (comma-separated for compare)",
       [&s](const std::string& v) {
         try {
           s.algos = parse_algos(v);
         } catch (const ConfigError& e) {
           throw CLI::ValidationError("--algo", e.what());
         }
       });
  text("--n", "columns of A (ambient dimension per component)",
       [&s, integer](const std::string& v) { s.n = static_cast<Index>(integer(v, "--n")); });
  text("--m", "rows of A",
       [&s, integer](const std::string& v) { s.m = static_cast<Index>(integer(v, "--m")); });
  text("--r", "number of components",
       [&s, integer](const std::string& v) { s.r = static_cast<Index>(integer(v, "--r")); });
  text("--mu", "l1 weight", [&s, number](const std::string& v) { s.mu = number(v, "--mu"); });
  text("--t", "step parameter (default 1/(2 |A|_2^2))",
       [&s, number](const std::string& v) { s.t = number(v, "--t"); });
  text("--rho", "backtracking factor in (0, 1/2]",
       [&s, number](const std::string& v) { s.rho = number(v, "--rho"); });
  text("--epsilon", "switch threshold on |v| for rpn-g and the rpn warm start",
       [&s, number](const std::string& v) { s.epsilon = number(v, "--epsilon"); });
  text("--tol", "stop when |v| <= tol",
       [&s, number](const std::string& v) { s.tol = number(v, "--tol"); });
  text("--max-iter", "iteration cap", [&s, integer](const std::string& v) {
    s.max_iter = static_cast<int>(integer(v, "--max-iter"));
  });
  text("--seeds", "seed count N (seeds 0..N-1) or a comma-separated list",
       [&s](const std::string& v) {
         try {
           s.seeds = parse_seeds(v);
         } catch (const ConfigError& e) {
           throw CLI::ValidationError("--seeds", e.what());
         }
       });
  text("--out", "output directory (run, compare) or file (gen-data)",
       [&s](const std::string& v) { s.out = v; });
  text("--data", "read A from a matrix file instead of generating it",
       [&s](const std::string& v) { s.data = v; });
}

}  // namespace manprox::app
