#pragma once

#include <cstdint>
#include <vector>

#include "edrep/matstore.hpp"

namespace edrep {

/// Class assignment of each row, 0-based in memory (files store 1-based).
struct LabelVector {
  std::vector<int> labels;
  int kappa = 1;

  static LabelVector constant(Index n) { return {std::vector<int>(static_cast<std::size_t>(n), 0), 1}; }

  Index size() const { return static_cast<Index>(labels.size()); }
  /// Throws ValidationError unless every label lies in [0, kappa) and every class is used.
  void validate() const;
  std::vector<Index> class_sizes() const;
};

/// Moment-matched Gaussian mixture (pi, mu, Omega) of a matrix with `count` rows.
struct MixtureParams {
  Index count = 0;
  Vector weights;                           // pi, length kappa
  DenseMatrix means;                        // kappa x d, one mu per row
  std::vector<Eigen::MatrixXd> covariances; // kappa symmetric d x d

  int kappa() const { return static_cast<int>(weights.size()); }
  Index dim() const { return means.cols(); }
};

struct KMeansResult {
  LabelVector labels;
  DenseMatrix centroids;
  double inertia = 0.0;  // within-cluster sum of squares
  int iterations = 0;
};

/// Lloyd iterations from k-means++ seeding, Euclidean distance on raw rows.
/// Stops when no label changes or after max_iter sweeps. A cluster that
/// empties takes the point farthest from its own centroid.
KMeansResult kmeans(const DenseMatrix& y, int kappa, std::uint64_t seed, int max_iter = 100);

/// Best inertia over `restarts` runs with seeds derived from `seed`.
KMeansResult kmeans_best_of(const DenseMatrix& y, int kappa, std::uint64_t seed, int restarts, int max_iter = 100);

inline LabelVector kmeans_label(const DenseMatrix& y, int kappa, std::uint64_t seed, int max_iter = 100) {
  return kmeans(y, kappa, seed, max_iter).labels;
}

/// Class fractions |V_a| / m.
Vector class_weights(const LabelVector& labels);

/// pi, class means, and unbiased class covariances (divisor |V_a| - 1,
/// zero for singleton classes).
MixtureParams estimate_mixture(const DenseMatrix& y, const LabelVector& labels);

/// Same means and covariances, with pi supplied by the caller.
MixtureParams estimate_mixture(const DenseMatrix& y, const LabelVector& labels, const Vector& weights);

}  // namespace edrep
