#include "app.hpp"

#include "manprox/matrix_io.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

namespace manprox::app {

namespace fs = std::filesystem;

namespace {

// Tolerance on ‖v‖ for the check subcommand to call a point stationary.
constexpr double kStationaryTol = 1e-8;

std::mt19937_64 start_stream(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 1u};
  return std::mt19937_64(seq);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string point_file(const fs::path& dir, const std::string& algo, std::uint64_t seed) {
  return (dir / ("x_" + algo + "_seed" + std::to_string(seed) + ".csv")).string();
}

Mat as_point_matrix(const Vec& x, Index n, Index r) {
  return Eigen::Map<const Mat>(x.data(), n, r);
}

nlohmann::json spec_json(const RunSpec& spec) {
  return {{"problem", problem_name(spec.problem)},
          {"m", spec.m},
          {"n", spec.n},
          {"r", spec.r},
          {"mu", spec.mu},
          {"rho", spec.cfg.rho},
          {"epsilon", spec.cfg.epsilon},
          {"tol", spec.cfg.tol_final},
          {"max_iter", spec.cfg.max_iter}};
}

}  // namespace

Mat build_data(const RunSpec& spec, std::uint64_t seed) {
  if (!spec.data.empty()) return read_matrix(spec.data);
  switch (spec.problem) {
    case ProblemKind::kHandcrafted:
      return gen_handcrafted(seed).a;
    case ProblemKind::kSynthetic:
      return standardize_columns(gen_synthetic(spec.m, spec.n, seed));
    case ProblemKind::kRandom:
      break;
  }
  return standardize_columns(gen_random(spec.m, spec.n, seed));
}

Instance build_instance(const RunSpec& spec, std::uint64_t seed) {
  Mat a;
  Vec x0;
  if (spec.problem == ProblemKind::kHandcrafted && spec.data.empty()) {
    HandcraftedInstance h = gen_handcrafted(seed);
    a = std::move(h.a);
    x0 = std::move(h.x0);
  } else {
    a = build_data(spec, seed);
  }
  if (a.cols() < spec.r) throw ConfigError("data has fewer columns than r");
  Instance inst{make_sparse_pca(std::move(a), spec.r, spec.mu), Vec(), spec.cfg};
  if (x0.size() == 0) {
    auto rng = start_stream(seed);
    x0 = inst.problem.manifold.random_point(rng);
  }
  inst.x0 = std::move(x0);
  inst.cfg.seed = seed;
  inst.cfg.t = spec.t ? *spec.t : default_step(inst.problem);
  return inst;
}

ConvergenceTrace run_algorithm(const std::string& algo, const Instance& inst) {
  if (algo == "manpg") return run_manpg(inst.x0, inst.cfg, inst.problem);
  if (algo == "rpn-g") return run_rpn_g(inst.x0, inst.cfg, inst.problem);
  if (algo == "rpn-n") return run_rpn_naive(inst.x0, inst.cfg, inst.problem);
  if (algo == "rpn") {
    Vec start;
    try {
      start = warm_start_manpg(inst.x0, inst.cfg, inst.problem, inst.cfg.epsilon);
    } catch (const Error& e) {
      ConvergenceTrace trace;
      trace.algorithm = "rpn";
      trace.x_final = inst.x0;
      trace.error = std::string("warm start: ") + e.what();
      return trace;
    }
    return run_rpn(start, inst.cfg, inst.problem);
  }
  throw ConfigError("unknown algorithm '" + algo + "'");
}

int thread_cap() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const char* env = std::getenv("MANPROX_THREADS");
  if (env == nullptr || *env == '\0') return static_cast<int>(hw);
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1) return 1;
  return static_cast<int>(v);
}

std::vector<SeedRun> run_seeds(const RunSpec& spec, const std::string& algo) {
  std::vector<SeedRun> runs(spec.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      SeedRun& run = runs[i];
      run.seed = spec.seeds[i];
      try {
        const Instance inst = build_instance(spec, run.seed);
        run.trace = run_algorithm(algo, inst);
      } catch (const std::exception& e) {
        run.trace.algorithm = algo;
        run.trace.error = e.what();
      }
      summarize(run.trace);
      if (algo == "manpg") {
        // No Newton phase; fit the whole ‖v‖ sequence instead.
        std::vector<double> v;
        for (const auto& r : run.trace.records) v.push_back(r.v_norm);
        run.rate = estimate_rate(std::span<const double>(v));
      } else {
        run.rate = estimate_rate(run.trace);
      }
      run.audit = audit_trace(run.trace);
      run.first_mask_change = first_mask_change(run.trace);
    }
  };
  const int threads = std::min<int>(thread_cap(), static_cast<int>(runs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return runs;
}

nlohmann::json seed_json(const SeedRun& run) {
  nlohmann::json j = {{"seed", run.seed},
                      {"converged", run.trace.converged},
                      {"error", run.trace.error ? nlohmann::json(*run.trace.error) : nullptr},
                      {"summary", summary_json(run.trace.summary)},
                      {"rate", rate_json(run.rate)},
                      {"audit", audit_json(run.audit)}};
  j["first_mask_change"] =
      run.first_mask_change ? nlohmann::json(*run.first_mask_change) : nlohmann::json(nullptr);
  return j;
}

int cmd_run(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  std::vector<std::vector<SeedRun>> all;
  for (const auto& algo : spec.algos) all.push_back(run_seeds(spec, algo));

  std::vector<SummaryRow> rows;
  nlohmann::json diag = {{"spec", spec_json(spec)}, {"runs", nlohmann::json::array()}};
  bool any_ok = false;
  for (std::size_t a = 0; a < spec.algos.size(); ++a) {
    std::vector<const ConvergenceTrace*> traces;
    nlohmann::json seeds = nlohmann::json::array();
    for (const SeedRun& run : all[a]) {
      traces.push_back(&run.trace);
      seeds.push_back(seed_json(run));
      if (run.trace.error) err << spec.algos[a] << " seed " << run.seed << ": " << *run.trace.error << '\n';
    }
    SummaryRow row = average_summary(spec.algos[a], spec.n, spec.r, spec.mu, traces);
    any_ok = any_ok || row.runs > 0;
    nlohmann::json entry = {{"algo", spec.algos[a]}, {"completed", row.runs}, {"seeds", seeds}};
    diag["runs"].push_back(entry);
    rows.push_back(std::move(row));
  }

  if (!spec.out.empty()) {
    ensure_dir(spec.out);
    const fs::path dir(spec.out);
    {
      auto os = open_out(dir / "trace.jsonl");
      for (const auto& runs : all)
        for (const SeedRun& run : runs) write_trace_jsonl(os, run.trace, run.seed);
    }
    {
      auto os = open_out(dir / "summary.csv");
      write_summary_csv(os, rows);
    }
    {
      auto os = open_out(dir / "diagnostics.json");
      os << diag.dump(2) << '\n';
    }
    for (std::size_t a = 0; a < spec.algos.size(); ++a)
      for (const SeedRun& run : all[a])
        if (run.trace.x_final.size() == spec.n * spec.r)
          write_matrix_csv(point_file(dir, spec.algos[a], run.seed),
                           as_point_matrix(run.trace.x_final, spec.n, spec.r));
  }
  out << diag.dump(2) << '\n';
  return any_ok ? 0 : 1;
}

int cmd_compare(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  // One seed: the long table has no seed column.
  RunSpec one = spec;
  one.seeds = {spec.seeds.front()};
  std::vector<SeedRun> runs;
  for (const auto& algo : spec.algos) runs.push_back(std::move(run_seeds(one, algo).front()));

  std::vector<const ConvergenceTrace*> traces;
  bool any_ok = false;
  for (const SeedRun& run : runs) {
    traces.push_back(&run.trace);
    if (run.trace.error) {
      err << run.trace.algorithm << " seed " << run.seed << ": " << *run.trace.error << '\n';
    } else {
      any_ok = true;
    }
  }
  if (spec.out.empty()) {
    write_compare_csv(out, traces);
  } else {
    ensure_dir(spec.out);
    auto os = open_out(fs::path(spec.out) / "compare.csv");
    write_compare_csv(os, traces);
    nlohmann::json diag = {{"spec", spec_json(spec)}, {"runs", nlohmann::json::array()}};
    for (const SeedRun& run : runs) {
      nlohmann::json j = seed_json(run);
      j["algo"] = run.trace.algorithm;
      diag["runs"].push_back(j);
    }
    out << diag.dump(2) << '\n';
  }
  return any_ok ? 0 : 1;
}

int cmd_check(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  if (spec.point.empty()) {
    err << "check needs --point\n";
    return 2;
  }
  const Instance inst = build_instance(spec, spec.seeds.front());
  const Problem& p = inst.problem;
  Mat pm = read_matrix(spec.point);
  if (pm.rows() == 1 && spec.r == 1) pm.transposeInPlace();
  if (pm.rows() != spec.n || pm.cols() != spec.r) {
    err << "point is " << pm.rows() << "x" << pm.cols() << ", expected " << spec.n << "x" << spec.r
        << '\n';
    return 2;
  }
  const Vec x = Eigen::Map<const Vec>(pm.data(), pm.size());
  const double t = inst.cfg.t;

  nlohmann::json j;
  j["feasibility_residual"] = p.manifold.feasibility_residual(x);
  j["objective"] = p.objective(x);
  const ProxSolution prox = solve_tangent_prox(p.manifold, x, p.egrad(x), t, p.mu);
  const double v_norm = prox.v.norm();
  const bool stationary = v_norm <= kStationaryTol;
  j["stationarity"] = {{"v_norm", v_norm}, {"tol", kStationaryTol}, {"ok", stationary}};

  const RankCheck rank = check_assumption_rank(p.manifold, x, prox.mask);
  j["rank"] = {{"ok", rank.ok},
               {"sigma_min", rank.sigma_min},
               {"active_rows", rank.active_rows},
               {"normal_dim", p.manifold.normal_dim()}};

  bool second_ok = false;
  if (stationary) {
    const SecondOrderCheck so = check_second_order(x, p, prox, t);
    second_ok = so.psd && so.j_nonsingular.value_or(true);
    j["second_order"] = {
        {"psd", so.psd},
        {"min_eig", std::isfinite(so.min_eig) ? nlohmann::json(so.min_eig) : nlohmann::json(nullptr)},
        {"null_dim", so.null_dim},
        {"j_nonsingular",
         so.j_nonsingular ? nlohmann::json(*so.j_nonsingular) : nlohmann::json(nullptr)},
        {"j_sigma_min", so.j_sigma_min}};
  } else {
    j["second_order"] = nullptr;
  }
  std::vector<int> mask(static_cast<std::size_t>(prox.mask.size()));
  for (Index i = 0; i < prox.mask.size(); ++i) mask[static_cast<std::size_t>(i)] = prox.mask(i) != 0.0;
  j["mask"] = mask;
  const bool pass = stationary && rank.ok && second_ok;
  j["pass"] = pass;
  out << j.dump(2) << '\n';
  return pass ? 0 : 1;
}

int cmd_gen_data(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  if (spec.out.empty()) {
    err << "gen-data needs --out FILE\n";
    return 2;
  }
  const Mat a = build_data(spec, spec.seeds.front());
  if (spec.format == "bin") {
    write_matrix_binary(spec.out, a);
  } else {
    write_matrix_csv(spec.out, a);
  }
  out << a.rows() << "x" << a.cols() << " -> " << spec.out << '\n';
  return 0;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Riemannian proximal Newton experiments for sparse PCA"};
  app.require_subcommand(1);
  Settings flags;
  std::string config_path;

  auto* run = app.add_subcommand("run", "run algorithms over seeds; write trace, summary, diagnostics");
  auto* compare = app.add_subcommand("compare", "long-format |v_k| versus time table for plotting");
  auto* check = app.add_subcommand("check", "stationarity, rank and second-order checks at a point");
  auto* gen = app.add_subcommand("gen-data", "write the data matrix of a problem to a file");
  for (auto* cmd : {run, compare, check, gen}) add_common_flags(*cmd, flags, config_path);
  std::string point;
  check->add_option("--point", point, "matrix file with the point (n x r)")->required();
  std::string format;
  gen->add_option("--format", format, "csv or bin")->check(CLI::IsMember({"csv", "bin"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }
  if (!point.empty()) flags.point = point;
  if (!format.empty()) flags.format = format;

  try {
    Settings file;
    if (!config_path.empty()) file = load_toml(config_path);
    Settings merged = merge(flags, file);
    if (compare->parsed() && !merged.algos) merged.algos = std::vector<std::string>{"manpg", "rpn-g"};
    const RunSpec spec = resolve(merged);
    if (run->parsed()) return cmd_run(spec, out, err);
    if (compare->parsed()) return cmd_compare(spec, out, err);
    if (check->parsed()) return cmd_check(spec, out, err);
    return cmd_gen_data(spec, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace manprox::app
