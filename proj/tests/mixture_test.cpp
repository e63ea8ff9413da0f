#include "edrep/mixture.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "test_util.hpp"

namespace edrep {
namespace {

using testing::random_dense;

TEST(KMeans, SingleClassIsConstant) {
  const auto labels = kmeans_label(random_dense(30, 4, 1), 1, 7);
  EXPECT_EQ(labels.kappa, 1);
  for (int l : labels.labels) EXPECT_EQ(l, 0);
}

TEST(KMeans, SeparatesDistantClouds) {
  DenseMatrix y = random_dense(40, 3, 2, 0.1 / std::sqrt(3.0));
  for (Index i = 0; i < 40; ++i) y(i, 0) += i < 20 ? 10.0 : -10.0;
  const auto labels = kmeans_label(y, 2, 3);
  for (Index i = 1; i < 20; ++i) EXPECT_EQ(labels.labels[i], labels.labels[0]);
  for (Index i = 21; i < 40; ++i) EXPECT_EQ(labels.labels[i], labels.labels[20]);
  EXPECT_NE(labels.labels[0], labels.labels[20]);
}

double inertia_of(const DenseMatrix& y, const std::vector<int>& labels, int k) {
  double total = 0.0;
  for (int c = 0; c < k; ++c) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(y.cols());
    int count = 0;
    for (Index i = 0; i < y.rows(); ++i)
      if (labels[i] == c) {
        mean += y.row(i);
        ++count;
      }
    if (count == 0) return std::numeric_limits<double>::infinity();
    mean /= count;
    for (Index i = 0; i < y.rows(); ++i)
      if (labels[i] == c) total += (y.row(i) - mean).squaredNorm();
  }
  return total;
}

TEST(KMeans, NearExhaustiveOptimumOnEightPoints) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DenseMatrix y = random_dense(8, 2, seed + 50);
    double best = std::numeric_limits<double>::infinity();
    for (int mask = 0; mask < 256; ++mask) {
      std::vector<int> l(8);
      for (int i = 0; i < 8; ++i) l[i] = (mask >> i) & 1;
      best = std::min(best, inertia_of(y, l, 2));
    }
    const auto r = kmeans_best_of(y, 2, seed, 10);
    EXPECT_NEAR(r.inertia, inertia_of(y, r.labels.labels, 2), 1e-9);
    EXPECT_LE(r.inertia, 1.05 * best) << "seed " << seed;
  }
}

TEST(KMeans, DeterministicAndValid) {
  const DenseMatrix y = random_dense(200, 5, 9);
  const auto a = kmeans(y, 6, 11);
  const auto b = kmeans(y, 6, 11);
  EXPECT_EQ(a.labels.labels, b.labels.labels);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_NO_THROW(a.labels.validate());
}

TEST(KMeans, EveryClusterNonemptyWithDuplicates) {
  // Many identical points force seeding to reuse locations; classes must still be nonempty.
  DenseMatrix y = DenseMatrix::Zero(10, 2);
  y(9, 0) = 1.0;
  const auto r = kmeans(y, 4, 1);
  EXPECT_NO_THROW(r.labels.validate());
}

TEST(KMeans, KappaBeyondRowsRejected) {
  EXPECT_THROW(kmeans_label(random_dense(3, 2, 1), 4, 0), ValidationError);
  EXPECT_THROW(kmeans_label(random_dense(3, 2, 1), 0, 0), ValidationError);
}

TEST(LabelVector, Validation) {
  EXPECT_NO_THROW((LabelVector{{0, 1, 1}, 2}.validate()));
  EXPECT_THROW((LabelVector{{0, 2, 1}, 2}.validate()), ValidationError);
  EXPECT_THROW((LabelVector{{0, 0, 0}, 2}.validate()), ValidationError);
  EXPECT_EQ((LabelVector{{0, 1, 1}, 2}.class_sizes()), (std::vector<Index>{1, 2}));
}

TEST(EstimateMixture, TwoPointCovariance) {
  DenseMatrix y(2, 2);
  y << 1, 0, 0, 1;
  const auto p = estimate_mixture(y, LabelVector::constant(2));
  EXPECT_EQ(p.count, 2);
  EXPECT_DOUBLE_EQ(p.weights[0], 1.0);
  EXPECT_DOUBLE_EQ(p.means(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(p.means(0, 1), 0.5);
  Eigen::MatrixXd expected(2, 2);
  expected << 0.5, -0.5, -0.5, 0.5;
  EXPECT_LT((p.covariances[0] - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EstimateMixture, IdenticalRowsAndSingletonsHaveZeroCovariance) {
  DenseMatrix y(4, 3);
  y << 1, 2, 3, 1, 2, 3, 1, 2, 3, 5, 5, 5;
  const auto p = estimate_mixture(y, LabelVector{{0, 0, 0, 1}, 2});
  EXPECT_EQ(p.covariances[0], Eigen::MatrixXd::Zero(3, 3));
  EXPECT_EQ(p.covariances[1], Eigen::MatrixXd::Zero(3, 3));
  EXPECT_EQ(p.means.row(1), y.row(3));
}

TEST(EstimateMixture, MatchesTwoPassOracle) {
  const DenseMatrix y = random_dense(200, 5, 4);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(0, 2);
  LabelVector labels{std::vector<int>(200), 3};
  for (auto& l : labels.labels) l = pick(rng);
  const auto p = estimate_mixture(y, labels);
  EXPECT_NEAR(p.weights.sum(), 1.0, 1e-12);
  for (int a = 0; a < 3; ++a) {
    // First pass: mean. Second pass: centered outer products.
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(5);
    int count = 0;
    for (Index i = 0; i < 200; ++i)
      if (labels.labels[i] == a) {
        mean += y.row(i).transpose();
        ++count;
      }
    mean /= count;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(5, 5);
    for (Index i = 0; i < 200; ++i)
      if (labels.labels[i] == a) {
        const Eigen::VectorXd c = y.row(i).transpose() - mean;
        cov += c * c.transpose();
      }
    cov /= (count - 1);
    EXPECT_NEAR(p.weights[a], count / 200.0, 1e-15);
    EXPECT_LT((p.means.row(a).transpose() - mean).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((p.covariances[a] - cov).cwiseAbs().maxCoeff(), 1e-10);

    // Raw second moments agree with the centered formula.
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(5, 5);
    for (Index i = 0; i < 200; ++i)
      if (labels.labels[i] == a) raw += y.row(i).transpose() * y.row(i);
    const Eigen::MatrixXd from_raw = (raw - count * mean * mean.transpose()) / (count - 1);
    EXPECT_LT((p.covariances[a] - from_raw).cwiseAbs().maxCoeff(), 1e-9);

    // Symmetric and positive semidefinite.
    EXPECT_LT((p.covariances[a] - p.covariances[a].transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.covariances[a]);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
  }
}

TEST(EstimateMixture, SingleClassIsGlobalSampleStatistics) {
  const DenseMatrix y = random_dense(50, 4, 6);
  const auto p = estimate_mixture(y, LabelVector::constant(50));
  const Eigen::RowVectorXd mean = y.colwise().mean();
  const DenseMatrix c = y.rowwise() - mean;
  const Eigen::MatrixXd cov = c.transpose() * c / 49.0;
  EXPECT_LT((p.means.row(0) - mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((p.covariances[0] - cov).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EstimateMixture, RelabelingPermutesParameters) {
  const DenseMatrix y = random_dense(60, 3, 8);
  LabelVector a{std::vector<int>(60), 3};
  for (Index i = 0; i < 60; ++i) a.labels[i] = static_cast<int>(i % 3);
  const std::vector<int> perm{2, 0, 1};
  LabelVector b = a;
  for (auto& l : b.labels) l = perm[l];
  const auto pa = estimate_mixture(y, a);
  const auto pb = estimate_mixture(y, b);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(pa.weights[k], pb.weights[perm[k]]);
    EXPECT_EQ(pa.means.row(k), pb.means.row(perm[k]));
    EXPECT_LT((pa.covariances[k] - pb.covariances[perm[k]]).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(EstimateMixture, SuppliedWeightsAndErrors) {
  const DenseMatrix y = random_dense(10, 2, 1);
  LabelVector l{{0, 0, 0, 0, 0, 1, 1, 1, 1, 1}, 2};
  Vector w(2);
  w << 0.3, 0.7;
  EXPECT_EQ(estimate_mixture(y, l, w).weights, w);
  EXPECT_EQ(class_weights(l), Vector::Constant(2, 0.5));
  EXPECT_THROW(estimate_mixture(y, LabelVector::constant(9)), DimensionError);
  EXPECT_THROW(estimate_mixture(y, l, Vector::Constant(3, 1.0 / 3)), DimensionError);
}

}  // namespace
}  // namespace edrep
