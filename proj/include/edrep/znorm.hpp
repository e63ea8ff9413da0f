#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "edrep/matstore.hpp"
#include "edrep/mixture.hpp"

namespace edrep {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      carry_ += (sum_ - t) + v;
    else
      carry_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

enum class ZMethod { exact, mixture, performer, rfa };

std::string to_string(ZMethod m);

/// Softmax normalization constants Z_i = sum_a exp(x_i . y_a), one per row of X.
struct ZEstimate {
  Vector values;
  ZMethod method = ZMethod::exact;
  int parameter = 0;           // kappa for mixture, D for kernel methods
  bool includes_self = false;  // X and Y are the same matrix and a = i is summed
  std::vector<Index> clamped;  // rows whose kernel estimate was not positive

  Index size() const { return values.size(); }
};

/// Largest |x_i . y_a| accepted by exact_z before exp() leaves double range.
inline constexpr double kMaxExponent = 700.0;

/// Exact constants with compensated summation, O(n m d).
/// Throws NumericError if any scalar product exceeds kMaxExponent in magnitude.
ZEstimate exact_z(const DenseMatrix& x, const DenseMatrix& y);

enum class SelfTerm { include, exclude };

/// Symmetric case X = Y. The a = i term e^{|x_i|^2} is kept unless excluded.
ZEstimate exact_z(const DenseMatrix& x, SelfTerm self = SelfTerm::include);

/// Exact constants for a subset of rows of X (the sampled-index protocol).
ZEstimate exact_z_rows(const DenseMatrix& x, const std::vector<Index>& rows, const DenseMatrix& y);

/// Per-row mixture terms zeta_ia = pi_a exp(x_i.mu_a + x_i^T Omega_a x_i / 2), n x kappa.
DenseMatrix mixture_terms(const DenseMatrix& x, const MixtureParams& params);

/// Z_i ~= m * sum_a zeta_ia, O(n kappa d^2).
ZEstimate approx_z(const DenseMatrix& x, const MixtureParams& params);

enum class KernelVariant { performer, rfa };

/// Random Gaussian projection W (D x d) shared by both kernel baselines.
struct KernelFeatureMap {
  DenseMatrix w;
  std::uint64_t seed = 0;

  static KernelFeatureMap sample(Index features, Index dim, std::uint64_t seed);
  Index features() const { return w.rows(); }
  Index dim() const { return w.cols(); }

  /// phi_W(x) for each row of x, with E[phi(x).phi(y)] = exp(-|x - y|^2 / 2).
  /// performer: D^{-1/2} e^{-|x|^2} [e^{w_k.x}]_k (D columns)
  /// rfa:       D^{-1/2} [cos(w_k.x), sin(w_k.x)]_k (2D columns)
  DenseMatrix features_of(const DenseMatrix& x, KernelVariant variant) const;
};

/// Z_i ~= e^{|x_i|^2/2} phi(x_i) . m_W with m_W = sum_a e^{|y_a|^2/2} phi(y_a).
/// Nonpositive estimates are floored at kKernelFloor and listed in `clamped`.
ZEstimate kernel_z(const DenseMatrix& x, const DenseMatrix& y, const KernelFeatureMap& map, KernelVariant variant);

inline constexpr double kKernelFloor = 1e-300;

/// |candidate - reference| / reference, row by row.
Vector relative_errors(const ZEstimate& reference, const ZEstimate& candidate);

struct CdfPoint {
  double error = 0.0;
  double fraction = 0.0;
};

/// Sorted relative errors with empirical CDF ordinates k/n.
std::vector<CdfPoint> error_cdf(const ZEstimate& reference, const ZEstimate& candidate);

/// Raw samples of x_i . y_a for a = 1..m, for external plotting of f_i.
Vector scalar_products(const DenseMatrix& x, Index row, const DenseMatrix& y);

using SampleGenerator = std::function<Vector(std::mt19937_64&)>;

struct ConcentrationRow {
  Index m = 0;
  double mean = 0.0;  // mean of Z/m across repeats
  double std = 0.0;   // sample standard deviation of Z/m
};

/// For each m, draws `repeats` independent sets of m vectors from `gen` and
/// reports the spread of Z/m for the fixed query `x`.
std::vector<ConcentrationRow> concentration_probe(const SampleGenerator& gen, const Vector& x,
                                                  const std::vector<Index>& m_grid, int repeats,
                                                  std::uint64_t seed);

/// Right-hand side of the concentration bound 4 exp(-(sqrt(m) t / (4 e h))^2).
double concentration_bound(Index m, double t, double h);

}  // namespace edrep
