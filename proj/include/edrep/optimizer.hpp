#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "edrep/matstore.hpp"
#include "edrep/mixture.hpp"
#include "edrep/znorm.hpp"

namespace edrep {

struct OptimizerConfig {
  Index dim = 32;
  double eta0 = 0.7;
  int epochs = 25;
  int kappa = 1;
  std::uint64_t seed = 0;
  bool sym = true;

  /// Throws ValidationError on out-of-range fields (eta0 must lie in (0, 1]).
  void validate() const;
};

/// Step size of epoch t (0-based): eta0 * (1 - t / epochs).
double learning_rate(const OptimizerConfig& cfg, int epoch);

/// n rows drawn from an isotropic normal and scaled to unit length.
DenseMatrix random_unit_rows(Index n, Index d, std::uint64_t seed);

/// Euclidean gradient g with its tangential part g' = g - (g.x) x and the
/// unit direction g'' = g' / |g'|. Rows whose tangential part vanishes are
/// marked inactive and have zero direction.
struct GradientMatrix {
  DenseMatrix g;
  DenseMatrix tangent;
  DenseMatrix direction;
  std::vector<char> active;

  static GradientMatrix decompose(DenseMatrix g, const DenseMatrix& x);
};

/// x_i <- sqrt(1 - eta^2) x_i - eta g''_i on active rows; inactive rows are
/// copied. Output rows are unit length.
DenseMatrix sphere_step(const DenseMatrix& x, const GradientMatrix& g, double eta);

// --- Objective --------------------------------------------------------------
// L(X) = -tr(X^T P X) + sum_i log Z_i + tr(X^T 1 p0^T X)

/// Objective with exact Z_i = sum_j exp(x_i.x_j). Quadratic cost.
double exact_loss(const DenseMatrix& x, const ProductChain& p, const RegularizationWeights& p0);

/// Objective whose Z_i sums over `keys` instead of X itself (keys frozen at a snapshot).
double exact_loss_with_keys(const DenseMatrix& x, const DenseMatrix& keys, const ProductChain& p,
                            const RegularizationWeights& p0);

/// Objective with Z_i replaced by the mixture estimate for the given parameters.
double approx_loss(const DenseMatrix& x, const ProductChain& p, const RegularizationWeights& p0,
                   const MixtureParams& params);

/// -(P + P^T) X + (1 p0^T + p0 1^T) X, the part of the gradient that does not involve Z.
DenseMatrix linear_gradient(const DenseMatrix& x, const ProductChain& p, const RegularizationWeights& p0);

/// Mixture log-Z term: row i is sum_a zeta_ia (mu_a + Omega_a x_i) / sum_a zeta_ia.
DenseMatrix mixture_log_z_gradient(const DenseMatrix& x, const MixtureParams& params);

/// Full approximate gradient with mu and Omega held constant, O(E d + n kappa d^2).
GradientMatrix approx_gradient(const DenseMatrix& x, const ProductChain& p, const RegularizationWeights& p0,
                               const MixtureParams& params);

enum class ExactGradient {
  /// Derivative of log Z_i through x_i only (the keys held at the snapshot):
  /// row i is sum_j softmax_ij x_j. This is the exact counterpart of the mixture term.
  frozen_keys,
  /// Total derivative of sum_i log Z_i: (S + S^T) X with S the softmax matrix.
  full,
};

/// Softmax log-Z gradient term, O(n^2 d).
DenseMatrix exact_log_z_gradient(const DenseMatrix& x, ExactGradient mode);

GradientMatrix exact_gradient(const DenseMatrix& x, const ProductChain& p, const RegularizationWeights& p0,
                              ExactGradient mode = ExactGradient::frozen_keys);

// --- Training ---------------------------------------------------------------

struct EpochState {
  int epoch = 0;      // 0 for the initial point, t after the t-th update
  double eta = 0.0;   // step size used to reach this state
  const DenseMatrix& x;
  const DenseMatrix* y = nullptr;  // keys in the asymmetric mode
  const LabelVector& labels;
  const Vector& weights;           // pi, fixed for the run
};

struct FitOptions {
  /// Fixed labels; when absent and kappa > 1 a kappa = 1 pass is clustered first.
  std::optional<LabelVector> labels;
  std::function<void(const EpochState&)> on_epoch;
};

/// Largest n accepted by fit_exact.
inline constexpr Index kExactFitLimit = 20000;

/// Symmetric EDRep training loop on the unit sphere; returns X (n x dim).
DenseMatrix fit(const ProductChain& p, const RegularizationWeights& p0, const OptimizerConfig& cfg,
                const FitOptions& opts = {});

/// Same loop with exact softmax constants and the exact frozen-key log-Z term.
DenseMatrix fit_exact(const ProductChain& p, const RegularizationWeights& p0, const OptimizerConfig& cfg,
                      const FitOptions& opts = {});

// --- Asymmetric mode: P is n x m over V x W, p0 has length m ------------------

struct AsymmetricEmbedding {
  DenseMatrix x;  // n x d, rows of V
  DenseMatrix y;  // m x d, rows of W
};

/// -tr(X^T P Y) + sum_i log Z_i + (1^T X).(p0^T Y) with exact Z_i = sum_a exp(x_i.y_a).
double exact_loss_asymmetric(const DenseMatrix& x, const DenseMatrix& y, const ProductChain& p,
                             const RegularizationWeights& p0);

/// Same with Z_i from the mixture fitted to Y under `labels` (and fixed `weights`).
double approx_loss_asymmetric(const DenseMatrix& x, const DenseMatrix& y, const ProductChain& p,
                              const RegularizationWeights& p0, const LabelVector& labels, const Vector& weights);

struct AsymmetricGradient {
  GradientMatrix x;
  GradientMatrix y;
};

/// Exact derivative of approx_loss_asymmetric in both blocks. The Y block
/// differentiates through the class means and covariances of Y.
AsymmetricGradient approx_gradient_asymmetric(const DenseMatrix& x, const DenseMatrix& y, const ProductChain& p,
                                              const RegularizationWeights& p0, const LabelVector& labels,
                                              const Vector& weights);

AsymmetricEmbedding fit_asymmetric(const ProductChain& p, const RegularizationWeights& p0,
                                   const OptimizerConfig& cfg, const FitOptions& opts = {});

}  // namespace edrep
