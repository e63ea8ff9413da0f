#include "edrep/znorm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace edrep {
namespace {

constexpr Index kRowBlock = 64;
constexpr Index kKeyBlock = 1024;

void check_dims(const DenseMatrix& x, const DenseMatrix& y) {
  if (x.cols() != y.cols())
    throw DimensionError("embedding dimensions differ: " + std::to_string(x.cols()) + " vs " +
                         std::to_string(y.cols()));
}

// Z for rows `rows` of x against all of y; `skip[k]` >= 0 names a key left out of row k.
Vector exact_block_sums(const DenseMatrix& x, const std::vector<Index>& rows, const DenseMatrix& y,
                        const std::vector<Index>& skip) {
  const Index count = static_cast<Index>(rows.size());
  Vector z(count);
  const Index nblocks = (count + kRowBlock - 1) / kRowBlock;
  double worst = 0.0;
  Index worst_row = -1;
#pragma omp parallel for schedule(dynamic)
  for (Index b = 0; b < nblocks; ++b) {
    const Index lo = b * kRowBlock;
    const Index hi = std::min(count, lo + kRowBlock);
    DenseMatrix xb(hi - lo, x.cols());
    for (Index r = lo; r < hi; ++r) xb.row(r - lo) = x.row(rows[r]);
    const DenseMatrix s = xb * y.transpose();
    for (Index r = lo; r < hi; ++r) {
      const double peak = s.row(r - lo).cwiseAbs().maxCoeff();
      if (!(peak <= kMaxExponent)) {
#pragma omp critical
        if (!(peak <= worst) || worst_row < 0) {
          worst = peak;
          worst_row = rows[r];
        }
        continue;
      }
      CompensatedSum acc;
      const Index skip_a = skip.empty() ? -1 : skip[r];
      for (Index a = 0; a < s.cols(); ++a)
        if (a != skip_a) acc.add(std::exp(s(r - lo, a)));
      z[r] = acc.value();
    }
  }
  if (worst_row >= 0) {
    std::ostringstream os;
    os << "scalar product magnitude " << worst << " at row " << worst_row << " exceeds " << kMaxExponent
       << "; rescale the embeddings to bounded norms";
    throw NumericError(os.str());
  }
  return z;
}

std::vector<Index> all_rows(Index n) {
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

// Deterministic pairwise reduction of equally shaped partial sums.
Vector tree_reduce(std::vector<Vector> parts) {
  if (parts.empty()) return {};
  while (parts.size() > 1) {
    std::vector<Vector> next;
    next.reserve((parts.size() + 1) / 2);
    for (std::size_t k = 0; k + 1 < parts.size(); k += 2) next.push_back(parts[k] + parts[k + 1]);
    if (parts.size() % 2) next.push_back(std::move(parts.back()));
    parts = std::move(next);
  }
  return parts.front();
}

}  // namespace

std::string to_string(ZMethod m) {
  switch (m) {
    case ZMethod::exact: return "exact";
    case ZMethod::mixture: return "mixture";
    case ZMethod::performer: return "performer";
    case ZMethod::rfa: return "rfa";
  }
  return "unknown";
}

ZEstimate exact_z(const DenseMatrix& x, const DenseMatrix& y) {
  check_dims(x, y);
  ZEstimate z;
  z.values = exact_block_sums(x, all_rows(x.rows()), y, {});
  z.method = ZMethod::exact;
  return z;
}

ZEstimate exact_z(const DenseMatrix& x, SelfTerm self) {
  ZEstimate z;
  const auto rows = all_rows(x.rows());
  z.values = exact_block_sums(x, rows, x, self == SelfTerm::exclude ? rows : std::vector<Index>{});
  z.method = ZMethod::exact;
  z.includes_self = self == SelfTerm::include;
  return z;
}

ZEstimate exact_z_rows(const DenseMatrix& x, const std::vector<Index>& rows, const DenseMatrix& y) {
  check_dims(x, y);
  for (Index r : rows)
    if (r < 0 || r >= x.rows()) throw DimensionError("sampled row " + std::to_string(r) + " out of range");
  ZEstimate z;
  z.values = exact_block_sums(x, rows, y, {});
  z.method = ZMethod::exact;
  return z;
}

DenseMatrix mixture_terms(const DenseMatrix& x, const MixtureParams& params) {
  if (x.cols() != params.dim())
    throw DimensionError("mixture dimension " + std::to_string(params.dim()) + " does not match embedding " +
                         std::to_string(x.cols()));
  const int k = params.kappa();
  DenseMatrix exponent = x * params.means.transpose();
  for (int a = 0; a < k; ++a) {
    // x_i^T Omega x_i as the row-wise dot of X and X Omega.
    const DenseMatrix xo = x * params.covariances[a];
    exponent.col(a) += 0.5 * xo.cwiseProduct(x).rowwise().sum();
  }
  DenseMatrix zeta(x.rows(), k);
  for (Index i = 0; i < x.rows(); ++i)
    for (int a = 0; a < k; ++a) zeta(i, a) = params.weights[a] * std::exp(exponent(i, a));
  if (!zeta.allFinite()) throw NumericError("mixture terms overflowed; rescale the embeddings");
  return zeta;
}

ZEstimate approx_z(const DenseMatrix& x, const MixtureParams& params) {
  const DenseMatrix zeta = mixture_terms(x, params);
  ZEstimate z;
  z.values = static_cast<double>(params.count) * zeta.rowwise().sum();
  z.method = ZMethod::mixture;
  z.parameter = params.kappa();
  return z;
}

KernelFeatureMap KernelFeatureMap::sample(Index features, Index dim, std::uint64_t seed) {
  if (features < 1 || dim < 1) throw ValidationError("feature map needs positive D and d");
  KernelFeatureMap map;
  map.seed = seed;
  map.w.resize(features, dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index k = 0; k < map.w.size(); ++k) map.w.data()[k] = normal(rng);
  return map;
}

DenseMatrix KernelFeatureMap::features_of(const DenseMatrix& x, KernelVariant variant) const {
  if (x.cols() != dim()) throw DimensionError("feature map dimension does not match embedding");
  const double scale = 1.0 / std::sqrt(static_cast<double>(features()));
  const DenseMatrix proj = x * w.transpose();
  if (variant == KernelVariant::performer) {
    DenseMatrix phi(x.rows(), features());
    for (Index i = 0; i < x.rows(); ++i) {
      const double sq = x.row(i).squaredNorm();
      for (Index k = 0; k < features(); ++k) phi(i, k) = scale * std::exp(proj(i, k) - sq);
    }
    return phi;
  }
  DenseMatrix phi(x.rows(), 2 * features());
  for (Index i = 0; i < x.rows(); ++i)
    for (Index k = 0; k < features(); ++k) {
      phi(i, k) = scale * std::cos(proj(i, k));
      phi(i, features() + k) = scale * std::sin(proj(i, k));
    }
  return phi;
}

ZEstimate kernel_z(const DenseMatrix& x, const DenseMatrix& y, const KernelFeatureMap& map, KernelVariant variant) {
  check_dims(x, y);
  if (map.dim() != x.cols()) throw DimensionError("feature map dimension does not match embeddings");

  const Index mblocks = (y.rows() + kKeyBlock - 1) / kKeyBlock;
  std::vector<Vector> partial(static_cast<std::size_t>(mblocks));
#pragma omp parallel for schedule(dynamic)
  for (Index b = 0; b < mblocks; ++b) {
    const Index lo = b * kKeyBlock;
    const Index len = std::min(y.rows(), lo + kKeyBlock) - lo;
    const DenseMatrix yb = y.middleRows(lo, len);
    const DenseMatrix phi = map.features_of(yb, variant);
    const Vector lift = (0.5 * yb.rowwise().squaredNorm()).array().exp();
    partial[b] = phi.transpose() * lift;
  }
  const Vector m_w = tree_reduce(std::move(partial));

  ZEstimate z;
  z.method = variant == KernelVariant::performer ? ZMethod::performer : ZMethod::rfa;
  z.parameter = static_cast<int>(map.features());
  z.values.resize(x.rows());
  const Index nblocks = (x.rows() + kKeyBlock - 1) / kKeyBlock;
#pragma omp parallel for schedule(dynamic)
  for (Index b = 0; b < nblocks; ++b) {
    const Index lo = b * kKeyBlock;
    const Index len = std::min(x.rows(), lo + kKeyBlock) - lo;
    const DenseMatrix xb = x.middleRows(lo, len);
    const Vector dots = map.features_of(xb, variant) * m_w;
    for (Index r = 0; r < len; ++r) z.values[lo + r] = std::exp(0.5 * xb.row(r).squaredNorm()) * dots[r];
  }
  for (Index i = 0; i < z.values.size(); ++i) {
    if (!(z.values[i] > 0.0)) {
      z.values[i] = kKernelFloor;
      z.clamped.push_back(i);
    }
  }
  return z;
}

Vector relative_errors(const ZEstimate& reference, const ZEstimate& candidate) {
  if (reference.size() != candidate.size())
    throw DimensionError("estimates have different row counts: " + std::to_string(reference.size()) + " vs " +
                         std::to_string(candidate.size()));
  return ((candidate.values - reference.values).array().abs() / reference.values.array()).matrix();
}

std::vector<CdfPoint> error_cdf(const ZEstimate& reference, const ZEstimate& candidate) {
  const Vector err = relative_errors(reference, candidate);
  std::vector<double> sorted(err.data(), err.data() + err.size());
  std::sort(sorted.begin(), sorted.end());
  std::vector<CdfPoint> cdf(sorted.size());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t k = 0; k < sorted.size(); ++k) cdf[k] = {sorted[k], static_cast<double>(k + 1) / n};
  return cdf;
}

Vector scalar_products(const DenseMatrix& x, Index row, const DenseMatrix& y) {
  check_dims(x, y);
  if (row < 0 || row >= x.rows()) throw DimensionError("row index out of range");
  return y * x.row(row).transpose();
}

std::vector<ConcentrationRow> concentration_probe(const SampleGenerator& gen, const Vector& x,
                                                  const std::vector<Index>& m_grid, int repeats,
                                                  std::uint64_t seed) {
  if (repeats < 2) throw ValidationError("concentration probe needs at least two repeats");
  std::mt19937_64 rng(seed);
  std::vector<ConcentrationRow> table;
  for (Index m : m_grid) {
    if (m < 1) throw ValidationError("sample sizes must be positive");
    std::vector<double> ratios(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r) {
      CompensatedSum acc;
      for (Index a = 0; a < m; ++a) {
        const Vector y = gen(rng);
        if (y.size() != x.size()) throw DimensionError("generator dimension does not match query");
        const double s = x.dot(y);
        if (!(std::abs(s) <= kMaxExponent)) throw NumericError("scalar product outside representable range");
        acc.add(std::exp(s));
      }
      ratios[r] = acc.value() / static_cast<double>(m);
    }
    const double mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / repeats;
    double ss = 0.0;
    for (double v : ratios) ss += (v - mean) * (v - mean);
    table.push_back({m, mean, std::sqrt(ss / (repeats - 1))});
  }
  return table;
}

double concentration_bound(Index m, double t, double h) {
  const double z = std::sqrt(static_cast<double>(m)) * t / (4.0 * std::exp(1.0) * h);
  return 4.0 * std::exp(-z * z);
}

}  // namespace edrep
