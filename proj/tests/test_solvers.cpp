#include "manprox/diagnostics.hpp"
#include "manprox/problems.hpp"
#include "manprox/solvers.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace manprox;

namespace {

SolverConfig config_for(const Problem& p) {
  SolverConfig cfg;
  cfg.t = default_step(p);
  return cfg;
}

struct Handcrafted {
  HandcraftedInstance inst;
  Problem p;
  SolverConfig cfg;
};

Handcrafted handcrafted(std::uint64_t seed) {
  HandcraftedInstance inst = gen_handcrafted(seed);
  Problem p = make_sparse_pca(inst.a, 1, kHandcraftedMu);
  SolverConfig cfg = config_for(p);
  cfg.epsilon = kHandcraftedEpsilon;
  return {std::move(inst), std::move(p), cfg};
}

Problem random_problem(Index m, Index n, Index r, double mu, std::uint64_t seed) {
  return make_sparse_pca(standardize_columns(gen_random(m, n, seed)), r, mu);
}

Mat top_eigvecs(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a.transpose() * a);
  return es.eigenvectors();
}

}  // namespace

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.rho = 0.6;
  EXPECT_THROW(cfg.validate(), PreconditionViolation);
  cfg.rho = 0.0;
  EXPECT_THROW(cfg.validate(), PreconditionViolation);
  cfg = {};
  cfg.t = 0.0;
  EXPECT_THROW(cfg.validate(), PreconditionViolation);
  cfg = {};
  cfg.epsilon = cfg.tol_final;
  EXPECT_THROW(cfg.validate(), PreconditionViolation);
  cfg = {};
  cfg.max_iter = -1;
  EXPECT_THROW(cfg.validate(), PreconditionViolation);
  cfg = {};
  cfg.rho = 0.5;
  EXPECT_NO_THROW(cfg.validate());
}

TEST(ManpgStep, ZeroDirectionKeepsPoint) {
  const Mat a = gen_random(6, 5, 1);
  const Problem p = make_sparse_pca(a, 1, 0.0);
  const Vec x = top_eigvecs(a).col(4);
  SolverConfig cfg = config_for(p);
  ProxSolution prox;
  prox.v = Vec::Zero(5);
  prox.lambda = Vec::Zero(1);
  prox.mask = Vec::Ones(5);
  const ManpgStep step = manpg_step_from(x, prox, cfg, p);
  EXPECT_EQ(step.x_next, x);
  EXPECT_EQ(step.alpha, 1.0);
}

TEST(ManpgStep, SufficientDecrease) {
  const Problem p = random_problem(20, 40, 2, 0.5, 2);
  const SolverConfig cfg = config_for(p);
  std::mt19937_64 rng(70);
  int unit_steps = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const Vec x = p.manifold.random_point(rng);
    const ManpgStep step = manpg_step(x, cfg, p);
    EXPECT_FALSE(step.stalled);
    EXPECT_LE(p.objective(step.x_next), p.objective(x) - 0.5 * step.alpha * step.prox.v.squaredNorm());
    EXPECT_LT(p.manifold.feasibility_residual(step.x_next), 1e-12);
    unit_steps += step.alpha == 1.0 ? 1 : 0;
  }
  EXPECT_GE(unit_steps, 25);
}

TEST(ManpgStep, BacktrackCapRaises) {
  const Problem p = random_problem(10, 20, 1, 0.5, 3);
  SolverConfig cfg = config_for(p);
  cfg.t = 50.0;
  cfg.max_backtracks = 0;
  std::mt19937_64 rng(71);
  EXPECT_THROW(manpg_step(p.manifold.random_point(rng), cfg, p), LineSearchFailure);
}

TEST(RpnStep, StationaryPointIsFixed) {
  const Mat a = gen_random(6, 5, 4);
  const Problem p = make_sparse_pca(a, 1, 0.0);
  const Vec x = top_eigvecs(a).col(4);
  const RpnStep step = rpn_step(x, config_for(p), p);
  EXPECT_LT((step.x_next - x).norm(), 1e-12);
  EXPECT_LT(step.u.norm(), 1e-12);
}

TEST(RpnStep, SmoothCaseIsRiemannianNewton) {
  std::mt19937_64 rng(72);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat a = oracle::random_matrix(8, 6, rng);
    const Problem p = make_sparse_pca(a, 1, 0.0);
    const Vec top = top_eigvecs(a).col(5);
    Vec x = top + 0.05 * oracle::random_matrix(6, 1, rng).col(0);
    x.normalize();
    const RpnStep step = rpn_step(x, config_for(p), p);
    const Vec ref = oracle::sphere_newton_step(a.transpose() * a, x);
    EXPECT_LT((step.x_next - ref).norm(), 1e-10) << "trial " << trial;
  }
}

TEST(RpnStep, WarmStartConvergesQuickly) {
  const Problem p = random_problem(30, 60, 2, 0.6, 5);
  SolverConfig cfg = config_for(p);
  std::mt19937_64 rng(73);
  const Vec x0 = p.manifold.random_point(rng);
  const Vec warm = warm_start_manpg(x0, cfg, p, 1e-6);
  const ConvergenceTrace tr = run_rpn(warm, cfg, p);
  ASSERT_FALSE(tr.error) << *tr.error;
  EXPECT_TRUE(tr.converged);
  EXPECT_LE(tr.records.back().v_norm, 1e-12);
  EXPECT_LE(tr.records.back().k, 8);
}

TEST(RpnG, EpsilonAboveInitialResidualStartsNewtonAtOnce) {
  const Handcrafted h = handcrafted(1);
  SolverConfig cfg = h.cfg;
  cfg.epsilon = 1e6;
  const ConvergenceTrace tr = run_rpn_g(h.inst.x0, cfg, h.p);
  ASSERT_FALSE(tr.error);
  EXPECT_EQ(tr.records.front().phase, Phase::kNewton);
}

TEST(Drivers, MaxIterZeroGivesOneRecord) {
  const Handcrafted h = handcrafted(2);
  SolverConfig cfg = h.cfg;
  cfg.max_iter = 0;
  for (const ConvergenceTrace& tr :
       {run_manpg(h.inst.x0, cfg, h.p), run_rpn(h.inst.x0, cfg, h.p), run_rpn_g(h.inst.x0, cfg, h.p),
        run_rpn_naive(h.inst.x0, cfg, h.p)}) {
    ASSERT_EQ(tr.records.size(), 1u) << tr.algorithm;
    EXPECT_EQ(tr.records[0].k, 0);
    EXPECT_EQ(tr.records[0].alpha, 0.0);
    EXPECT_EQ(tr.x_final, h.inst.x0);
    EXPECT_EQ(tr.summary.iter, 0);
  }
}

TEST(Drivers, PhaseStructureAndSummary) {
  const Problem p = random_problem(40, 120, 1, 0.8, 6);
  SolverConfig cfg = config_for(p);
  std::mt19937_64 rng(74);
  const Vec x0 = p.manifold.random_point(rng);
  const ConvergenceTrace tr = run_rpn_g(x0, cfg, p);
  ASSERT_FALSE(tr.error);
  ASSERT_TRUE(tr.converged);
  // Gradient records form a prefix; fallback steps appear only in the Newton phase.
  bool newton = false;
  int used = 0;
  for (const IterationRecord& r : tr.records) {
    if (r.phase == Phase::kNewton) newton = true;
    EXPECT_EQ(r.phase == Phase::kNewton, newton) << "record " << r.k;
    if (r.fallback) EXPECT_EQ(r.phase, Phase::kNewton);
    if (r.used_newton) {
      ++used;
      EXPECT_FALSE(r.fallback);
    }
    EXPECT_EQ(r.k, &r - tr.records.data());
  }
  EXPECT_TRUE(newton);
  EXPECT_EQ(tr.summary.iter_u, used);
  EXPECT_FALSE(tr.summary.iter_v);
  EXPECT_EQ(tr.summary.iter, tr.records.back().k);
  EXPECT_EQ(tr.summary.v_norm, tr.records.back().v_norm);
  EXPECT_EQ(tr.summary.f, tr.records.back().objective);
  EXPECT_NEAR(tr.summary.f, p.objective(tr.x_final), 1e-12 * std::abs(tr.summary.f));
  EXPECT_TRUE(audit_trace(tr).ok);

  const ConvergenceTrace mg = run_manpg(x0, cfg, p);
  ASSERT_TRUE(mg.summary.iter_v);
  EXPECT_FALSE(mg.summary.iter_u);
  for (const IterationRecord& r : mg.records) {
    EXPECT_EQ(r.phase, Phase::kGradient);
    EXPECT_FALSE(r.used_newton);
  }
  for (std::size_t k = 1; k < mg.records.size(); ++k)
    EXPECT_LE(mg.records[k].objective, mg.records[k - 1].objective + mg.records[k - 1].f_noise);
  EXPECT_TRUE(audit_trace(mg).ok);
  // Both algorithms reach the same point.
  EXPECT_NEAR(mg.summary.f, tr.summary.f, 1e-8 * std::abs(tr.summary.f));
}

TEST(Drivers, ManpgIterVIsFirstIndexBelowDecadeOfBest) {
  ConvergenceTrace tr;
  tr.algorithm = "manpg";
  for (double v : {1.0, 0.3, 4e-3, 2e-3, 5e-4, 8e-4}) {
    IterationRecord r;
    r.k = static_cast<int>(tr.records.size());
    r.v_norm = v;
    tr.records.push_back(r);
  }
  tr.x_final = Vec::Zero(4);
  summarize(tr);
  ASSERT_TRUE(tr.summary.iter_v);
  EXPECT_EQ(*tr.summary.iter_v, 4);
  EXPECT_EQ(tr.summary.sparsity, 1.0);
}

TEST(Drivers, Deterministic) {
  const Problem p = random_problem(20, 50, 2, 0.6, 7);
  SolverConfig cfg = config_for(p);
  std::mt19937_64 rng(75);
  const Vec x0 = p.manifold.random_point(rng);
  const ConvergenceTrace a = run_rpn_g(x0, cfg, p);
  const ConvergenceTrace b = run_rpn_g(x0, cfg, p);
  ASSERT_EQ(a.records.size(), b.records.size());
  EXPECT_EQ(a.x_final, b.x_final);
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].objective, b.records[k].objective);
    EXPECT_EQ(a.records[k].v_norm, b.records[k].v_norm);
    EXPECT_EQ(a.records[k].mask_hash, b.records[k].mask_hash);
  }
}

TEST(Drivers, ErrorsAreRecordedInTheTrace) {
  const Problem p = random_problem(10, 20, 1, 0.5, 8);
  SolverConfig cfg = config_for(p);
  cfg.t = 50.0;
  cfg.max_backtracks = 0;
  std::mt19937_64 rng(76);
  const ConvergenceTrace tr = run_manpg(p.manifold.random_point(rng), cfg, p);
  ASSERT_TRUE(tr.error);
  EXPECT_FALSE(tr.converged);
  EXPECT_NE(tr.error->find("line search"), std::string::npos);
}

TEST(Drivers, WarmStartCap) {
  const Problem p = random_problem(10, 30, 1, 0.5, 9);
  SolverConfig cfg = config_for(p);
  cfg.max_iter = 2;
  std::mt19937_64 rng(77);
  EXPECT_THROW(warm_start_manpg(p.manifold.random_point(rng), cfg, p, 1e-12), Error);
}

TEST(MaskHash, DependsOnPatternOnly) {
  EXPECT_EQ(mask_hash((Vec(3) << 1, 0, 1).finished()), mask_hash((Vec(3) << 1, 0, 1).finished()));
  EXPECT_NE(mask_hash((Vec(3) << 1, 0, 1).finished()), mask_hash((Vec(3) << 0, 1, 1).finished()));
  EXPECT_NE(mask_hash(Vec::Ones(3)), mask_hash(Vec::Ones(4)));
}

TEST(NaiveSubproblem, SmoothCaseIsNewton) {
  std::mt19937_64 rng(78);
  const Mat a = oracle::random_matrix(8, 6, rng);
  const Problem p = make_sparse_pca(a, 1, 0.0);
  Vec x = top_eigvecs(a).col(5) + 0.05 * oracle::random_matrix(6, 1, rng).col(0);
  x.normalize();
  SolverConfig cfg = config_for(p);
  EXPECT_LT((rpn_naive_step(x, cfg, p) - oracle::sphere_newton_step(a.transpose() * a, x)).norm(), 1e-10);
}

TEST(NaiveSubproblem, MatchesSignEnumerationOracle) {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 4 + trial % 4;
    const Mat a = oracle::random_matrix(n + 1, n, rng);
    const Problem p = make_sparse_pca(a, 1, 0.3 + 0.1 * (trial % 5));
    Vec x = top_eigvecs(a).col(n - 1) + 0.1 * oracle::random_matrix(n, 1, rng).col(0);
    x.normalize();
    const Mat gram = a.transpose() * a;
    const Mat proj = Mat::Identity(n, n) - x * x.transpose();
    const Mat hess = proj * (-2.0 * gram) * proj + 2.0 * x.dot(gram * x) * proj;
    const Vec grad = proj * (-2.0 * gram * x);
    const NaiveSubproblemSolution sol = solve_naive_subproblem(x, p, default_step(p));
    const Vec ref = oracle::brute_force_kkt(x, grad, hess, p.mu, x.transpose());
    ASSERT_EQ(ref.size(), n) << "trial " << trial;
    EXPECT_LT((sol.v - ref).norm(), 1e-8) << "trial " << trial;
    EXPECT_LT(std::abs(x.dot(sol.v)), 1e-12);
  }
}

TEST(NaiveSubproblem, NonconvexAtSaddle) {
  const Mat a = gen_random(8, 6, 10);
  const Problem p = make_sparse_pca(a, 1, 0.2);
  const Vec x = top_eigvecs(a).col(4);
  EXPECT_THROW(solve_naive_subproblem(x, p, default_step(p)), NonconvexSubproblem);
}

TEST(Handcrafted, NewtonVariantsConvergeFromX0) {
  for (std::uint64_t seed : {0, 1, 2}) {
    const Handcrafted h = handcrafted(seed);
    for (const ConvergenceTrace& tr : {run_rpn(h.inst.x0, h.cfg, h.p), run_rpn_g(h.inst.x0, h.cfg, h.p)}) {
      ASSERT_FALSE(tr.error) << tr.algorithm << ": " << *tr.error;
      EXPECT_TRUE(tr.converged) << tr.algorithm << " seed " << seed;
      EXPECT_LE(tr.records.back().k, 10) << tr.algorithm << " seed " << seed;
      EXPECT_EQ(estimate_rate(tr).classification, RateClass::kQuadratic) << tr.algorithm << " seed " << seed;
    }
  }
}
