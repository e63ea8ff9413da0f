#include "edrep/znorm.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "test_util.hpp"

namespace edrep {
namespace {

using testing::random_dense;
using testing::unit_rows;

double median(Vector v) {
  std::sort(v.data(), v.data() + v.size());
  return v[v.size() / 2];
}

TEST(CompensatedSum, RecoversCancelledTerms) {
  CompensatedSum s;
  s.add(1.0);
  s.add(1e100);
  s.add(1.0);
  s.add(-1e100);
  EXPECT_EQ(s.value(), 2.0);
}

TEST(ExactZ, TwoTermClosedForm) {
  DenseMatrix x(1, 2), y(2, 2);
  x << 1, 0;
  y << 1, 0, 0, 1;
  const auto z = exact_z(x, y);
  EXPECT_EQ(z.method, ZMethod::exact);
  EXPECT_NEAR(z.values[0], std::exp(1.0) + 1.0, 1e-15);
}

TEST(ExactZ, ZeroQueryGivesRowCount) {
  const auto z = exact_z(DenseMatrix::Zero(3, 4), random_dense(17, 4, 1));
  for (Index i = 0; i < 3; ++i) EXPECT_EQ(z.values[i], 17.0);
}

TEST(ExactZ, MatchesExtendedPrecisionOracle) {
  const DenseMatrix x = random_dense(100, 8, 2, 0.6);
  const DenseMatrix y = random_dense(100, 8, 3, 0.6);
  const auto z = exact_z(x, y);
  for (Index i = 0; i < 100; ++i) {
    long double acc = 0.0L;
    for (Index a = 0; a < 100; ++a) {
      long double dot = 0.0L;
      for (Index k = 0; k < 8; ++k) dot += static_cast<long double>(x(i, k)) * y(a, k);
      acc += std::exp(dot);
    }
    EXPECT_LT(std::abs((z.values[i] - acc) / acc), 1e-12);
  }
}

TEST(ExactZ, InvariantUnderKeyPermutation) {
  const DenseMatrix x = random_dense(20, 5, 4);
  const DenseMatrix y = random_dense(30, 5, 5);
  DenseMatrix yp = y.colwise().reverse();
  const auto a = exact_z(x, y);
  const auto b = exact_z(x, yp);
  for (Index i = 0; i < 20; ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-13 * a.values[i]);
}

TEST(ExactZ, SelfTermDifference) {
  const DenseMatrix x = random_dense(25, 6, 6, 0.5);
  const auto with = exact_z(x, SelfTerm::include);
  const auto without = exact_z(x, SelfTerm::exclude);
  EXPECT_TRUE(with.includes_self);
  EXPECT_FALSE(without.includes_self);
  const auto plain = exact_z(x, x);
  for (Index i = 0; i < 25; ++i) {
    EXPECT_NEAR(with.values[i] - without.values[i], std::exp(x.row(i).squaredNorm()), 1e-12 * with.values[i]);
    EXPECT_NEAR(with.values[i], plain.values[i], 1e-13 * with.values[i]);
  }
}

TEST(ExactZ, RowsSubsetMatchesFull) {
  const DenseMatrix x = random_dense(40, 3, 7);
  const DenseMatrix y = random_dense(50, 3, 8);
  const auto full = exact_z(x, y);
  const std::vector<Index> rows{0, 7, 39};
  const auto part = exact_z_rows(x, rows, y);
  ASSERT_EQ(part.size(), 3);
  for (std::size_t k = 0; k < rows.size(); ++k) EXPECT_EQ(part.values[k], full.values[rows[k]]);
}

TEST(ExactZ, OverflowGuardAndDimensions) {
  DenseMatrix x(1, 1), y(1, 1);
  x << 30;
  y << 30;
  EXPECT_THROW(exact_z(x, y), NumericError);
  EXPECT_THROW(exact_z(DenseMatrix::Zero(2, 3), DenseMatrix::Zero(2, 4)), DimensionError);
}

TEST(ApproxZ, PointMassIsExact) {
  const DenseMatrix x = unit_rows(random_dense(10, 4, 9));
  DenseMatrix y(25, 4);
  const Eigen::RowVectorXd v = random_dense(1, 4, 10).row(0) * 0.3;
  y.rowwise() = v;
  const auto z = approx_z(x, estimate_mixture(y, LabelVector::constant(25)));
  const auto e = exact_z(x, y);
  for (Index i = 0; i < 10; ++i) {
    EXPECT_NEAR(z.values[i], 25.0 * std::exp(x.row(i).dot(v)), 1e-12 * z.values[i]);
    EXPECT_NEAR(z.values[i], e.values[i], 1e-10 * e.values[i]);
  }
}

TEST(ApproxZ, ZeroQueryGivesRowCount) {
  const DenseMatrix y = random_dense(30, 3, 11);
  LabelVector l{std::vector<int>(30), 3};
  for (Index i = 0; i < 30; ++i) l.labels[i] = static_cast<int>(i % 3);
  const auto z = approx_z(DenseMatrix::Zero(4, 3), estimate_mixture(y, l));
  for (Index i = 0; i < 4; ++i) EXPECT_NEAR(z.values[i], 30.0, 1e-12);
}

TEST(ApproxZ, ExactWhenRowsEqualClassMeans) {
  const DenseMatrix centers = random_dense(4, 5, 12, 0.4);
  DenseMatrix y(40, 5);
  LabelVector l{std::vector<int>(40), 4};
  for (Index i = 0; i < 40; ++i) {
    l.labels[i] = static_cast<int>((i * 7) % 4);
    y.row(i) = centers.row(l.labels[i]);
  }
  const DenseMatrix x = unit_rows(random_dense(15, 5, 13));
  const auto z = approx_z(x, estimate_mixture(y, l));
  const auto e = exact_z(x, y);
  for (Index i = 0; i < 15; ++i) EXPECT_NEAR(z.values[i], e.values[i], 1e-10 * e.values[i]);
}

TEST(ApproxZ, ZetaRowSumsMatchEstimate) {
  const DenseMatrix y = unit_rows(random_dense(300, 6, 14));
  const auto labels = kmeans_label(y, 5, 1);
  const auto params = estimate_mixture(y, labels);
  const DenseMatrix x = unit_rows(random_dense(50, 6, 15));
  const DenseMatrix zeta = mixture_terms(x, params);
  const auto z = approx_z(x, params);
  ASSERT_EQ(zeta.cols(), 5);
  EXPECT_GT(zeta.minCoeff(), 0.0);
  for (Index i = 0; i < 50; ++i) EXPECT_NEAR(zeta.row(i).sum() * 300.0, z.values[i], 1e-12 * z.values[i]);
}

TEST(ApproxZ, TwoComponentMixtureAccuracy) {
  // Keys from a two-component Gaussian mixture in d = 50, true labels.
  constexpr Index d = 50, m = 20000;
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  DenseMatrix centers = 0.5 * unit_rows(random_dense(2, d, 22));
  DenseMatrix y(m, d);
  LabelVector labels{std::vector<int>(m), 2};
  for (Index a = 0; a < m; ++a) {
    labels.labels[a] = a % 3 == 0 ? 1 : 0;
    for (Index k = 0; k < d; ++k) y(a, k) = centers(labels.labels[a], k) + 0.1 * g(rng);
  }
  const DenseMatrix x = unit_rows(random_dense(1000, d, 23));
  const Vector err = relative_errors(exact_z(x, y), approx_z(x, estimate_mixture(y, labels)));
  EXPECT_LT(median(err), 0.02);
}

TEST(KernelZ, RfaAtOriginIsExact) {
  const auto map = KernelFeatureMap::sample(64, 3, 5);
  const auto z = kernel_z(DenseMatrix::Zero(4, 3), DenseMatrix::Zero(9, 3), map, KernelVariant::rfa);
  for (Index i = 0; i < 4; ++i) EXPECT_NEAR(z.values[i], 9.0, 1e-12);
  EXPECT_TRUE(z.clamped.empty());
}

TEST(KernelZ, FeatureMapReproducibleFromSeed) {
  const auto a = KernelFeatureMap::sample(10, 4, 99);
  const auto b = KernelFeatureMap::sample(10, 4, 99);
  const auto c = KernelFeatureMap::sample(10, 4, 100);
  EXPECT_EQ(a.w, b.w);
  EXPECT_NE(a.w, c.w);
  EXPECT_EQ(a.features_of(random_dense(3, 4, 1), KernelVariant::rfa).cols(), 20);
  EXPECT_EQ(a.features_of(random_dense(3, 4, 1), KernelVariant::performer).cols(), 10);
}

TEST(KernelZ, FeaturesEstimateGaussianKernel) {
  const DenseMatrix pts = 0.5 * unit_rows(random_dense(6, 4, 30));
  const auto map = KernelFeatureMap::sample(200000, 4, 31);
  for (auto variant : {KernelVariant::performer, KernelVariant::rfa}) {
    const DenseMatrix phi = map.features_of(pts, variant);
    const DenseMatrix k = phi * phi.transpose();
    for (Index i = 0; i < 6; ++i)
      for (Index j = 0; j < 6; ++j) {
        const double truth = std::exp(-0.5 * (pts.row(i) - pts.row(j)).squaredNorm());
        EXPECT_NEAR(k(i, j), truth, 0.02);
      }
  }
}

TEST(KernelZ, PerformerConvergesWithFeatureCount) {
  const DenseMatrix x = unit_rows(random_dense(50, 8, 40));
  const auto exact = exact_z(x, SelfTerm::include);
  const auto small = kernel_z(x, x, KernelFeatureMap::sample(1000, 8, 41), KernelVariant::performer);
  const auto large = kernel_z(x, x, KernelFeatureMap::sample(100000, 8, 41), KernelVariant::performer);
  EXPECT_LT(median(relative_errors(exact, large)), median(relative_errors(exact, small)));
}

TEST(KernelZ, NonpositiveEstimatesAreFloored) {
  // Few trigonometric features on long vectors produce signed estimates.
  const DenseMatrix x = 2.0 * unit_rows(random_dense(200, 4, 50));
  const auto z = kernel_z(x, x, KernelFeatureMap::sample(2, 4, 51), KernelVariant::rfa);
  ASSERT_FALSE(z.clamped.empty());
  for (Index i : z.clamped) EXPECT_EQ(z.values[i], kKernelFloor);
  EXPECT_GT(z.values.minCoeff(), 0.0);
}

TEST(ErrorCdf, Basics) {
  ZEstimate ref;
  ref.values = Vector::Constant(3, 2.0);
  const auto same = error_cdf(ref, ref);
  ASSERT_EQ(same.size(), 3u);
  for (const auto& p : same) EXPECT_EQ(p.error, 0.0);
  EXPECT_DOUBLE_EQ(same.back().fraction, 1.0);

  ZEstimate one_ref, one_c;
  one_ref.values = Vector::Constant(1, 2.0);
  one_c.values = Vector::Constant(1, 3.0);
  const auto single = error_cdf(one_ref, one_c);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_DOUBLE_EQ(single[0].error, 0.5);
  EXPECT_DOUBLE_EQ(single[0].fraction, 1.0);
}

TEST(ErrorCdf, MonotoneAgainstSortOracle) {
  const DenseMatrix y = unit_rows(random_dense(2000, 10, 60));
  const DenseMatrix x = unit_rows(random_dense(1000, 10, 61));
  const auto ref = exact_z(x, y);
  const auto cand = approx_z(x, estimate_mixture(y, LabelVector::constant(2000)));
  const auto cdf = error_cdf(ref, cand);
  std::vector<double> oracle(1000);
  for (Index i = 0; i < 1000; ++i) oracle[i] = std::abs(cand.values[i] - ref.values[i]) / ref.values[i];
  std::sort(oracle.begin(), oracle.end());
  ASSERT_EQ(cdf.size(), 1000u);
  for (std::size_t k = 0; k < 1000; ++k) {
    EXPECT_EQ(cdf[k].error, oracle[k]);
    EXPECT_DOUBLE_EQ(cdf[k].fraction, static_cast<double>(k + 1) / 1000.0);
    if (k) {
      EXPECT_GE(cdf[k].error, cdf[k - 1].error);
      EXPECT_GT(cdf[k].fraction, cdf[k - 1].fraction);
    }
  }
}

TEST(ScalarProducts, MatchDirectDots) {
  const DenseMatrix x = random_dense(3, 4, 70);
  const DenseMatrix y = random_dense(9, 4, 71);
  const Vector s = scalar_products(x, 1, y);
  ASSERT_EQ(s.size(), 9);
  for (Index a = 0; a < 9; ++a) EXPECT_NEAR(s[a], x.row(1).dot(y.row(a)), 1e-15);
}

Vector sphere_sample(std::mt19937_64& rng, Index d) {
  std::normal_distribution<double> g;
  Vector v(d);
  for (Index k = 0; k < d; ++k) v[k] = g(rng);
  return v / v.norm();
}

TEST(Concentration, ConstantGeneratorHasNoSpread) {
  const Vector y = Vector::Constant(5, 0.2);
  const auto rows = concentration_probe([&](std::mt19937_64&) { return y; }, Vector::Constant(5, 0.4), {10, 40},
                                        20, 1);
  for (const auto& r : rows) EXPECT_EQ(r.std, 0.0);
}

TEST(Concentration, StdHalvesWhenSampleQuadruples) {
  const Index d = 20;
  std::mt19937_64 qrng(3);
  const Vector x = sphere_sample(qrng, d);
  const auto rows =
      concentration_probe([d](std::mt19937_64& rng) { return sphere_sample(rng, d); }, x, {500, 2000}, 200, 4);
  ASSERT_EQ(rows.size(), 2u);
  const double ratio = rows[0].std / rows[1].std;
  EXPECT_GT(ratio, 2.0 / 1.5);
  EXPECT_LT(ratio, 2.0 * 1.5);
}

TEST(Concentration, BoundAnchor) {
  const double h = 1.0;
  const Index m = 400;
  const double t = 4.0 * std::exp(1.0) * h / std::sqrt(static_cast<double>(m));
  EXPECT_NEAR(concentration_bound(m, t, h), 4.0 * std::exp(-1.0), 1e-12);
}

}  // namespace
}  // namespace edrep
