#include "robustnmf/target_polish.hpp"

#include <gtest/gtest.h>

#include "robustnmf/metrics.hpp"
#include "testutil.hpp"

using namespace robustnmf;

namespace {

PolishConfig polish_config(WeightKind kind, std::size_t rank, std::size_t iters, double tol,
                           std::uint64_t seed) {
  PolishConfig c;
  c.scheme.kind = kind;
  c.solve.rank = rank;
  c.solve.n_iter_max = iters;
  c.solve.tol = tol;
  c.solve.seed = seed;
  return c;
}

}  // namespace

TEST(PolishTarget, AllOnesWeightsAreBitExactIdentity) {
  const DenseMatrix x = testutil::random_matrix(6, 5, 1);
  const DenseMatrix approx = testutil::random_matrix(6, 5, 2);
  WeightScheme none;
  const DenseMatrix target = polish_target(x, approx, none);
  EXPECT_EQ(target.values(), x.values());
}

TEST(PolishTarget, PerfectFitUnderCimIsIdentity) {
  const DenseMatrix x = DenseMatrix::from_data(2, 2, {0.0, 10.0, 10.0, 0.0});
  WeightScheme cim;
  cim.kind = WeightKind::kCim;
  const DenseMatrix target = polish_target(x, x, cim);  // zero residual -> G = 1
  EXPECT_EQ(target.values(), x.values());
}

TEST(PolishTarget, EntriesStayBetweenValueAndMedian) {
  for (WeightKind kind : {WeightKind::kNone, WeightKind::kCim, WeightKind::kHuber,
                          WeightKind::kL1, WeightKind::kL21}) {
    const DenseMatrix x = testutil::random_matrix(8, 7, 3, 0.0, 1.0);
    const DenseMatrix approx = testutil::random_matrix(8, 7, 4, 0.0, 1.0);
    WeightScheme s;
    s.kind = kind;
    const DenseMatrix target = polish_target(x, approx, s);
    const double med = global_median(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double lo = std::min(med, x.values()[i]) - 1e-12;
      const double hi = std::max(med, x.values()[i]) + 1e-12;
      EXPECT_GE(target.values()[i], lo);
      EXPECT_LE(target.values()[i], hi);
      EXPECT_GE(target.values()[i], 0.0);
    }
  }
}

TEST(TargetChange, KnownValues) {
  const DenseMatrix a = testutil::random_matrix(5, 4, 5, 0.1, 1.0);
  EXPECT_EQ(target_change(a, a), 0.0);
  DenseMatrix twice = a;
  for (double& v : twice.values()) v *= 2.0;
  EXPECT_NEAR(target_change(a, twice), 1.0, 1e-12);

  const DenseMatrix b = testutil::random_matrix(5, 4, 6, 0.1, 1.0);
  const DenseMatrix diff = elementwise(b, a, ElementOp::kSub);
  EXPECT_NEAR(target_change(a, b), frobenius_norm(diff) / frobenius_norm(a), 1e-12);

  EXPECT_THROW(target_change(DenseMatrix(2, 2, 0.0), DenseMatrix(2, 2, 1.0)), NumericError);
}

TEST(ScheduleStep, ClosedFormValues) {
  const PolishConfig cfg;  // max_step_iter=100, slope=10, inflexion=0.01
  EXPECT_EQ(schedule_step(0.01, cfg), 51u);
  EXPECT_EQ(schedule_step(0.0, cfg), 53u);
  EXPECT_EQ(schedule_step(10.0, cfg), 1u);
}

TEST(ScheduleStep, RangeAndMonotonicity) {
  const PolishConfig cfg;
  std::size_t prev = 1 + cfg.max_step_iter;
  for (double change : {0.0, 1e-6, 0.005, 0.01, 0.02, 0.1, 1.0, 10.0, 1e9}) {
    const std::size_t s = schedule_step(change, cfg);
    EXPECT_GE(s, 1u);
    EXPECT_LE(s, 1 + cfg.max_step_iter);
    EXPECT_LE(s, prev);  // nonincreasing in change
    prev = s;
  }
  EXPECT_THROW(schedule_step(-0.1, cfg), std::invalid_argument);
}

TEST(RefineCount, LogisticMappingBothDirections) {
  PolishConfig cfg;  // refine_max_iter = 20
  EXPECT_EQ(detail::refine_iteration_count(0.0, cfg), 10u);
  EXPECT_EQ(detail::refine_iteration_count(100.0, cfg), 0u);
  cfg.refine_direction = RefineDirection::kReflected;
  EXPECT_EQ(detail::refine_iteration_count(100.0, cfg), 20u);
  EXPECT_EQ(detail::refine_iteration_count(0.0, cfg), 10u);
}

TEST(SolveTargetPolish, NoneSchemeReducesToPlainNmf) {
  const DenseMatrix x = testutil::random_matrix(16, 12, 7, 0.05, 1.0);
  const std::uint64_t seed = 13;
  // tol 0: both solvers run the full budget and land on a bit-stable fixed
  // point, so the refinement cannot move the factors
  SolveConfig scfg;
  scfg.rank = 2;
  scfg.n_iter_max = 3000;
  scfg.tol = 0.0;
  scfg.seed = seed;
  const SolveResult plain = solve_nmf(x, scfg);

  PolishConfig pcfg = polish_config(WeightKind::kNone, 2, 3000, 0.0, seed);
  const PolishResult polished = solve_target_polish(x, pcfg);

  // identical sweeps against a bit-identical target
  ASSERT_EQ(polished.objective.size(), plain.objective.size());
  EXPECT_EQ(polished.objective, plain.objective);
  EXPECT_EQ(polished.state.iter, plain.sweeps);

  // refinement at a hard-converged point is a no-op
  EXPECT_LE(testutil::max_abs_diff(polished.factors.w, plain.factors.w), 1e-9);
  EXPECT_LE(testutil::max_abs_diff(polished.factors.h, plain.factors.h), 1e-9);
}

TEST(SolveTargetPolish, ObjectiveNonincreasingBetweenRefreshes) {
  const DenseMatrix clean = testutil::planted_low_rank(30, 20, 3, 8);
  const DenseMatrix x = testutil::with_outliers(clean, 0.05, 10.0, 9);
  const PolishResult r = solve_target_polish(x, polish_config(WeightKind::kCim, 3, 200, 0.0, 3));
  ASSERT_EQ(r.objective.size(), r.refresh.size());
  std::size_t checked = 0;
  for (std::size_t t = 1; t < r.objective.size(); ++t) {
    if (r.refresh[t]) continue;  // target changed under the objective
    EXPECT_LE(r.objective[t], r.objective[t - 1] * (1.0 + 1e-12)) << "sweep " << t;
    ++checked;
  }
  EXPECT_GT(checked, 0u);
}

TEST(SolveTargetPolish, BeatsPlainNmfOnPlantedOutliers) {
  const DenseMatrix clean = testutil::planted_low_rank(40, 30, 3, 10);
  const DenseMatrix x = testutil::with_outliers(clean, 0.05, 10.0, 11);

  SolveConfig scfg;
  scfg.rank = 3;
  scfg.n_iter_max = 200;
  scfg.tol = 0.0;
  scfg.seed = 21;
  const SolveResult plain = solve_nmf(x, scfg);

  const PolishResult polished =
      solve_target_polish(x, polish_config(WeightKind::kCim, 3, 200, 0.0, 21));

  EXPECT_LT(rre(clean, polished.factors), rre(clean, plain.factors));
}

TEST(SolveTargetPolish, DeterministicGivenConfig) {
  const DenseMatrix clean = testutil::planted_low_rank(20, 15, 2, 12);
  const DenseMatrix x = testutil::with_outliers(clean, 0.05, 8.0, 13);
  const PolishConfig cfg = polish_config(WeightKind::kHuber, 2, 80, 0.0, 5);
  const PolishResult a = solve_target_polish(x, cfg);
  const PolishResult b = solve_target_polish(x, cfg);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.refresh, b.refresh);
  EXPECT_EQ(a.factors.w.values(), b.factors.w.values());
  EXPECT_EQ(a.factors.h.values(), b.factors.h.values());
  EXPECT_EQ(a.refine_iters, b.refine_iters);
}

TEST(SolveTargetPolish, StateInvariants) {
  const DenseMatrix clean = testutil::planted_low_rank(18, 14, 2, 14);
  const DenseMatrix x = testutil::with_outliers(clean, 0.08, 6.0, 15);
  const PolishConfig cfg = polish_config(WeightKind::kCim, 2, 60, 0.0, 2);
  const PolishResult r = solve_target_polish(x, cfg, &clean);
  EXPECT_EQ(r.state.iter, r.objective.size());
  EXPECT_EQ(r.clean_rre.size(), r.objective.size());
  EXPECT_GE(r.state.step_iter, 1u);
  EXPECT_LE(r.state.step_iter, 1 + cfg.max_step_iter);
  EXPECT_LE(r.refine_iters, cfg.refine_max_iter);
  EXPECT_TRUE(r.state.target.same_shape(x));
  // target entries bounded by the polish blend
  const double med = global_median(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_GE(r.state.target.values()[i], std::min(med, x.values()[i]) - 1e-12);
    EXPECT_LE(r.state.target.values()[i], std::max(med, x.values()[i]) + 1e-12);
  }
}
