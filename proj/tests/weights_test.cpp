#include "robustnmf/weights.hpp"

#include <gtest/gtest.h>

#include "testutil.hpp"

using namespace robustnmf;

namespace {

WeightScheme scheme_of(WeightKind kind) {
  WeightScheme s;
  s.kind = kind;
  return s;
}

}  // namespace

TEST(Weights, NoneIsAllOnes) {
  const DenseMatrix x = testutil::random_matrix(4, 5, 1);
  const DenseMatrix approx = testutil::random_matrix(4, 5, 2);
  const DenseMatrix g = compute_weights(scheme_of(WeightKind::kNone), x, approx);
  for (double v : g.values()) EXPECT_EQ(v, 1.0);
}

TEST(Weights, CimZeroResidualGivesOnes) {
  const DenseMatrix x = testutil::random_matrix(3, 3, 3);
  const DenseMatrix g = compute_weights(scheme_of(WeightKind::kCim), x, x);
  for (double v : g.values()) EXPECT_EQ(v, 1.0);  // sigma^2 = 0 degenerate path
}

TEST(Weights, CimUnitVarianceResidualGivesExpMinusOne) {
  // residuals alternate +c/-c: mean 0, population variance c^2, so every
  // r^2/sigma^2 = 1 and every weight is exp(-1).
  const double c = 0.37;
  DenseMatrix x(2, 4, 0.0);
  DenseMatrix approx(2, 4, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i % 2 == 0) {
      x.values()[i] = c;
    } else {
      approx.values()[i] = c;
    }
  }
  const DenseMatrix g = compute_weights(scheme_of(WeightKind::kCim), x, approx);
  for (double v : g.values()) EXPECT_NEAR(v, std::exp(-1.0), 1e-12);
  EXPECT_NEAR(g(0, 0), 0.367879441171442, 1e-12);
}

TEST(Weights, CimSigmaSourceSwitch) {
  const DenseMatrix x = testutil::random_matrix(5, 5, 4, 0.0, 1.0);
  const DenseMatrix approx = testutil::random_matrix(5, 5, 5, 0.0, 1.0);
  WeightScheme s = scheme_of(WeightKind::kCim);
  s.cim_sigma_source = CimSigmaSource::kResidual;
  const DenseMatrix g_res = compute_weights(s, x, approx);
  s.cim_sigma_source = CimSigmaSource::kData;
  const DenseMatrix g_data = compute_weights(s, x, approx);
  EXPECT_NE(g_res.values(), g_data.values());
}

TEST(Weights, HuberKnownValues) {
  // |residuals| = {1,1,1,2}: delta = median = 1. The |r|=2 entry gets 1/2.
  const DenseMatrix x = DenseMatrix::from_data(2, 2, {1.0, 1.0, 1.0, 2.0});
  const DenseMatrix approx(2, 2, 0.0);
  const DenseMatrix g = compute_weights(scheme_of(WeightKind::kHuber), x, approx);
  EXPECT_DOUBLE_EQ(g(0, 0), 1.0);  // |r| <= delta keeps full weight
  EXPECT_DOUBLE_EQ(g(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(g(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(g(1, 1), 0.5);  // |r| = 2*delta
}

TEST(Weights, HuberDegenerateDeltaZero) {
  // majority of residuals exactly zero -> delta = 0
  DenseMatrix x(3, 3, 0.0);
  DenseMatrix approx(3, 3, 0.0);
  x(0, 0) = 5.0;
  const DenseMatrix g = compute_weights(scheme_of(WeightKind::kHuber), x, approx);
  for (double v : g.values()) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(g(1, 1), 1.0);      // zero residual keeps weight 1
  EXPECT_LT(g(0, 0), 1e-10);    // eps / |r|
}

TEST(Weights, CimHuberRangeAndMonotonicity) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const DenseMatrix x = testutil::random_matrix(6, 7, 10 + seed, 0.0, 2.0);
    const DenseMatrix approx = testutil::random_matrix(6, 7, 20 + seed, 0.0, 2.0);
    for (WeightKind kind : {WeightKind::kCim, WeightKind::kHuber}) {
      const DenseMatrix g = compute_weights(scheme_of(kind), x, approx);
      std::vector<std::pair<double, double>> pairs;  // (|r|, g)
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = g.values()[i];
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, 1.0);
        pairs.emplace_back(std::abs(x.values()[i] - approx.values()[i]), v);
      }
      // nonincreasing in |r| within one matrix (shared sigma/delta)
      std::sort(pairs.begin(), pairs.end());
      for (std::size_t i = 1; i < pairs.size(); ++i) {
        EXPECT_LE(pairs[i].second, pairs[i - 1].second + 1e-12);
      }
    }
  }
}

TEST(Weights, HuberScaleConsistency) {
  const DenseMatrix approx = testutil::random_matrix(5, 6, 30, 0.0, 1.0);
  const DenseMatrix resid = testutil::random_matrix(5, 6, 31, -1.0, 1.0);
  const double c = 3.7;
  DenseMatrix x1(5, 6), x2(5, 6);
  for (std::size_t i = 0; i < x1.size(); ++i) {
    x1.values()[i] = approx.values()[i] + resid.values()[i];
    x2.values()[i] = approx.values()[i] + c * resid.values()[i];
  }
  const DenseMatrix g1 = compute_weights(scheme_of(WeightKind::kHuber), x1, approx);
  const DenseMatrix g2 = compute_weights(scheme_of(WeightKind::kHuber), x2, approx);
  EXPECT_LE(testutil::max_abs_diff(g1, g2), 1e-12);
}

TEST(Weights, L1PositiveFiniteEvenAtZeroResidual) {
  DenseMatrix x(2, 3, 1.0);
  DenseMatrix approx = x;
  approx(0, 0) = 0.5;
  const DenseMatrix g = compute_weights(scheme_of(WeightKind::kL1), x, approx);
  for (double v : g.values()) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0.0);
  }
  EXPECT_DOUBLE_EQ(g(0, 0), 2.0);    // 1/|0.5|
  EXPECT_DOUBLE_EQ(g(1, 1), 1e12);   // 1/eps
}

TEST(Weights, L21ColumnConstant) {
  const DenseMatrix x = testutil::random_matrix(6, 4, 40);
  const DenseMatrix approx = testutil::random_matrix(6, 4, 41);
  const DenseMatrix g = compute_weights(scheme_of(WeightKind::kL21), x, approx);
  for (std::size_t j = 0; j < g.cols(); ++j) {
    for (std::size_t i = 1; i < g.rows(); ++i) EXPECT_EQ(g(i, j), g(0, j));
    EXPECT_GT(g(0, j), 0.0);
    EXPECT_TRUE(std::isfinite(g(0, j)));
  }
}

TEST(Weights, DeterministicAndShapeChecked) {
  const DenseMatrix x = testutil::random_matrix(4, 4, 50);
  const DenseMatrix approx = testutil::random_matrix(4, 4, 51);
  const DenseMatrix a = compute_weights(scheme_of(WeightKind::kCim), x, approx);
  const DenseMatrix b = compute_weights(scheme_of(WeightKind::kCim), x, approx);
  EXPECT_EQ(a.values(), b.values());
  EXPECT_THROW(compute_weights(scheme_of(WeightKind::kCim), x, DenseMatrix(4, 5)), ShapeError);
}

TEST(Weights, ParseRoundTrip) {
  for (WeightKind k : {WeightKind::kNone, WeightKind::kCim, WeightKind::kHuber, WeightKind::kL1,
                       WeightKind::kL21}) {
    EXPECT_EQ(parse_weight_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_weight_kind("bogus"), std::invalid_argument);
}
