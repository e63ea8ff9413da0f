#include "edrep/mixture.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>

namespace edrep {

void LabelVector::validate() const {
  if (kappa < 1) throw ValidationError("label count kappa must be positive");
  std::vector<Index> out_of_range;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || labels[i] >= kappa) out_of_range.push_back(static_cast<Index>(i));
  if (!out_of_range.empty())
    throw ValidationError("labels out of range at rows " + format_rows(out_of_range), out_of_range);
  const auto sizes = class_sizes();
  for (int a = 0; a < kappa; ++a)
    if (sizes[a] == 0) throw ValidationError("class " + std::to_string(a + 1) + " is empty");
}

std::vector<Index> LabelVector::class_sizes() const {
  std::vector<Index> sizes(static_cast<std::size_t>(std::max(kappa, 0)), 0);
  for (int l : labels)
    if (l >= 0 && l < kappa) ++sizes[l];
  return sizes;
}

namespace {

// Squared distances from every row to every centroid, n x k.
DenseMatrix squared_distances(const DenseMatrix& y, const Vector& row_sq, const DenseMatrix& centroids) {
  DenseMatrix d2 = -2.0 * (y * centroids.transpose());
  const Vector c_sq = centroids.rowwise().squaredNorm();
  d2.colwise() += row_sq;
  d2.rowwise() += c_sq.transpose();
  return d2.cwiseMax(0.0);
}

DenseMatrix plus_plus_seeds(const DenseMatrix& y, int k, std::mt19937_64& rng) {
  const Index n = y.rows();
  DenseMatrix centroids(k, y.cols());
  std::uniform_int_distribution<Index> pick(0, n - 1);
  centroids.row(0) = y.row(pick(rng));
  Vector best = (y.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = best.sum();
    Index chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      chosen = n - 1;
      for (Index i = 0; i < n; ++i) {
        target -= best[i];
        if (target < 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    centroids.row(c) = y.row(chosen);
    best = best.cwiseMin((y.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const DenseMatrix& y, int kappa, std::uint64_t seed, int max_iter) {
  const Index n = y.rows();
  if (kappa < 1) throw ValidationError("kappa must be at least 1");
  if (kappa > n)
    throw ValidationError("kappa = " + std::to_string(kappa) + " exceeds the row count " + std::to_string(n));
  std::mt19937_64 rng(seed);
  const Vector row_sq = y.rowwise().squaredNorm();

  KMeansResult res;
  res.labels.kappa = kappa;
  res.labels.labels.assign(static_cast<std::size_t>(n), -1);
  res.centroids = plus_plus_seeds(y, kappa, rng);
  auto& lab = res.labels.labels;

  Vector dist(n);
  for (int iter = 0; iter < max_iter; ++iter) {
    const DenseMatrix d2 = squared_distances(y, row_sq, res.centroids);
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      Eigen::Index arg = 0;
      dist[i] = d2.row(i).minCoeff(&arg);
      if (lab[i] != static_cast<int>(arg)) {
        lab[i] = static_cast<int>(arg);
        changed = true;
      }
    }
    res.iterations = iter + 1;

    // Repair empty clusters by stealing the point farthest from its centroid.
    auto sizes = res.labels.class_sizes();
    for (int c = 0; c < kappa; ++c) {
      if (sizes[c] != 0) continue;
      Index far = -1;
      double far_d = -1.0;
      for (Index i = 0; i < n; ++i) {
        if (sizes[lab[i]] > 1 && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      --sizes[lab[far]];
      lab[far] = c;
      ++sizes[c];
      dist[far] = 0.0;
      res.centroids.row(c) = y.row(far);
      changed = true;
    }

    DenseMatrix sums = DenseMatrix::Zero(kappa, y.cols());
    for (Index i = 0; i < n; ++i) sums.row(lab[i]) += y.row(i);
    for (int c = 0; c < kappa; ++c) res.centroids.row(c) = sums.row(c) / static_cast<double>(sizes[c]);
    if (!changed) break;
  }

  res.inertia = 0.0;
  for (Index i = 0; i < n; ++i) res.inertia += (y.row(i) - res.centroids.row(lab[i])).squaredNorm();
  return res;
}

KMeansResult kmeans_best_of(const DenseMatrix& y, int kappa, std::uint64_t seed, int restarts, int max_iter) {
  std::seed_seq seq{seed, static_cast<std::uint64_t>(0x6b6d65616e73ULL)};
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(std::max(restarts, 1)));
  {
    std::vector<std::uint32_t> words(seeds.size() * 2);
    seq.generate(words.begin(), words.end());
    for (std::size_t r = 0; r < seeds.size(); ++r)
      seeds[r] = (static_cast<std::uint64_t>(words[2 * r]) << 32) | words[2 * r + 1];
  }
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (auto s : seeds) {
    auto r = kmeans(y, kappa, s, max_iter);
    if (r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

Vector class_weights(const LabelVector& labels) {
  labels.validate();
  const auto sizes = labels.class_sizes();
  Vector pi(labels.kappa);
  for (int a = 0; a < labels.kappa; ++a)
    pi[a] = static_cast<double>(sizes[a]) / static_cast<double>(labels.size());
  return pi;
}

MixtureParams estimate_mixture(const DenseMatrix& y, const LabelVector& labels) {
  return estimate_mixture(y, labels, class_weights(labels));
}

MixtureParams estimate_mixture(const DenseMatrix& y, const LabelVector& labels, const Vector& weights) {
  if (labels.size() != y.rows())
    throw DimensionError("label vector has " + std::to_string(labels.size()) + " entries for " +
                         std::to_string(y.rows()) + " rows");
  labels.validate();
  if (weights.size() != labels.kappa) throw DimensionError("mixture weight count does not match kappa");

  const int k = labels.kappa;
  const Index d = y.cols();
  const auto sizes = labels.class_sizes();

  MixtureParams p;
  p.count = y.rows();
  p.weights = weights;
  p.means = DenseMatrix::Zero(k, d);
  for (Index i = 0; i < y.rows(); ++i) p.means.row(labels.labels[i]) += y.row(i);
  for (int a = 0; a < k; ++a) p.means.row(a) /= static_cast<double>(sizes[a]);

  // Gather each class into a contiguous block, then one centered Gram per class.
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(k));
  for (Index i = 0; i < y.rows(); ++i) members[labels.labels[i]].push_back(i);
  p.covariances.assign(static_cast<std::size_t>(k), Eigen::MatrixXd::Zero(d, d));
#pragma omp parallel for schedule(dynamic)
  for (int a = 0; a < k; ++a) {
    if (sizes[a] < 2) continue;
    Eigen::MatrixXd centered(static_cast<Index>(members[a].size()), d);
    for (std::size_t r = 0; r < members[a].size(); ++r)
      centered.row(static_cast<Index>(r)) = y.row(members[a][r]) - p.means.row(a);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
    cov = cov.selfadjointView<Eigen::Lower>();
    p.covariances[a] = cov / static_cast<double>(sizes[a] - 1);
  }
  return p;
}

}  // namespace edrep
