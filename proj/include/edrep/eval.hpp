#pragma once

#include <cstdint>
#include <vector>

#include "edrep/graphs.hpp"
#include "edrep/matstore.hpp"
#include "edrep/mixture.hpp"
#include "edrep/optimizer.hpp"

namespace edrep {

/// Mutual information over the arithmetic mean of the two entropies.
/// Returns 0 when either partition is a single class (and 1 when both are).
double nmi(const std::vector<int>& a, const std::vector<int>& b);
inline double nmi(const LabelVector& a, const LabelVector& b) { return nmi(a.labels, b.labels); }

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// (1/n) |X X^T - Y Y^T|_F by row blocks of the n x n difference. O(n^2 d) time, O(n) memory per block.
double gram_deviation_direct(const DenseMatrix& x, const DenseMatrix& y);

/// Same quantity from d x d blocks: |X^T X|^2 + |Y^T Y|^2 - 2 |X^T Y|^2. O(n d^2);
/// loses absolute accuracy near zero through cancellation.
double gram_deviation_trace(const DenseMatrix& x, const DenseMatrix& y);

/// Uses the direct form up to this many rows, the trace form above.
inline constexpr Index kDirectGramLimit = 5000;

double gram_deviation(const DenseMatrix& x, const DenseMatrix& y);

/// C_t for paired trajectories.
std::vector<double> deviation_ct(const std::vector<DenseMatrix>& x_traj, const std::vector<DenseMatrix>& y_traj);

struct DeviationRun {
  std::vector<double> ct;  // epochs 0..n_epochs
};

/// Trains fit (mixture, cfg.kappa) and fit_exact from the same seed and reports C_t per epoch.
DeviationRun deviation_experiment(const ProductChain& p, const RegularizationWeights& p0, const OptimizerConfig& cfg);

struct PipelineResult {
  double nmi = 0.0;
  double seconds = 0.0;
  LabelVector inferred;
};

/// walk_operator -> fit -> k-means (q classes, best of `restarts`) -> NMI.
/// Timing covers everything after graph generation.
PipelineResult community_pipeline(const DcsbmInstance& instance, int w, const OptimizerConfig& cfg,
                                  int restarts = 10);

struct BenchRow {
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double nmi = 0.0;
  double seconds = 0.0;
};

/// One row per (alpha, seed). The graph and the embedding of each row share that seed.
std::vector<BenchRow> dcsbm_bench(const DcsbmParams& base, const std::vector<double>& alphas,
                                  const std::vector<std::uint64_t>& seeds, int w, const OptimizerConfig& cfg);

}  // namespace edrep
