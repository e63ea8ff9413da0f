#include "edrep/matstore.hpp"

#include <cmath>
#include <sstream>

namespace edrep {

std::string format_rows(const std::vector<Index>& rows, std::size_t limit) {
  std::ostringstream os;
  for (std::size_t k = 0; k < rows.size() && k < limit; ++k) {
    if (k) os << ", ";
    os << rows[k];
  }
  if (rows.size() > limit) os << " (+" << rows.size() - limit << " more)";
  return os.str();
}

void require_finite(const DenseMatrix& m, const char* what) {
  if (m.allFinite()) return;
  std::vector<Index> bad;
  for (Index i = 0; i < m.rows(); ++i)
    if (!m.row(i).allFinite()) bad.push_back(i);
  throw ValidationError(std::string(what) + ": nonfinite entries in rows " + format_rows(bad), bad);
}

SparseMatrix sparse_from_triplets(Index rows, Index cols,
                                  const std::vector<Eigen::Triplet<double, Index>>& triplets) {
  SparseMatrix s(rows, cols);
  s.setFromTriplets(triplets.begin(), triplets.end());
  s.makeCompressed();
  return s;
}

// ---------------------------------------------------------------------------
// ProductChain

ProductChain::ProductChain(std::vector<SparseMatrix> factors) : factors_(std::move(factors)) {
  check_conformable();
}

ProductChain::ProductChain(std::vector<SparseMatrix> factors, std::vector<double> prefix_weights)
    : factors_(std::move(factors)), weights_(std::move(prefix_weights)) {
  if (weights_.size() != factors_.size())
    throw DimensionError("prefix weight count " + std::to_string(weights_.size()) +
                         " does not match factor count " + std::to_string(factors_.size()));
  check_conformable();
}

ProductChain ProductChain::identity(Index n) {
  SparseMatrix eye(n, n);
  eye.setIdentity();
  eye.makeCompressed();
  return ProductChain({std::move(eye)});
}

void ProductChain::check_conformable() const {
  if (factors_.empty()) throw DimensionError("product chain needs at least one factor");
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    const auto& f = factors_[k];
    if (weighted() && f.rows() != f.cols())
      throw DimensionError("averaged chain factor " + std::to_string(k) + " is not square", k);
    if (k + 1 < factors_.size() && f.cols() != factors_[k + 1].rows())
      throw DimensionError("factor " + std::to_string(k) + " has " + std::to_string(f.cols()) +
                               " columns but factor " + std::to_string(k + 1) + " has " +
                               std::to_string(factors_[k + 1].rows()) + " rows",
                           k);
  }
  if (weighted()) {
    const Index n = factors_.front().rows();
    for (std::size_t k = 0; k < factors_.size(); ++k)
      if (factors_[k].rows() != n)
        throw DimensionError("averaged chain factor " + std::to_string(k) + " differs in size", k);
  }
}

Index ProductChain::rows() const { return factors_.empty() ? 0 : factors_.front().rows(); }
Index ProductChain::cols() const { return factors_.empty() ? 0 : factors_.back().cols(); }

Index ProductChain::nnz() const {
  Index e = 0;
  for (const auto& f : factors_) e += f.nonZeros();
  return e;
}

DenseMatrix ProductChain::apply(const DenseMatrix& x) const {
  if (factors_.empty()) throw DimensionError("empty product chain");
  if (x.rows() != cols())
    throw DimensionError("operand has " + std::to_string(x.rows()) + " rows but factor " +
                             std::to_string(factors_.size() - 1) + " has " +
                             std::to_string(cols()) + " columns",
                         factors_.size() - 1);
  DenseMatrix v = x;
  DenseMatrix acc;
  if (weighted()) acc = DenseMatrix::Zero(rows(), x.cols());
  std::size_t step = 0;
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it, ++step) {
    v = (*it) * v;
    if (weighted()) acc.noalias() += weights_[step] * v;
  }
  return weighted() ? acc : v;
}

DenseMatrix ProductChain::apply_transpose(const DenseMatrix& x) const {
  if (factors_.empty()) throw DimensionError("empty product chain");
  if (x.rows() != rows())
    throw DimensionError("operand has " + std::to_string(x.rows()) + " rows but factor 0 has " +
                             std::to_string(rows()) + " rows",
                         0);
  if (!weighted()) {
    DenseMatrix v = x;
    for (const auto& f : factors_) v = f.transpose() * v;
    return v;
  }
  // Horner form of sum_t w_t A_1^T ... A_t^T x, A_t the t-th factor applied.
  const std::size_t m = factors_.size();
  DenseMatrix acc = weights_[m - 1] * x;
  for (std::size_t t = m; t-- > 0;) {
    // Application step t uses factors_[m - 1 - t].
    acc = factors_[m - 1 - t].transpose() * acc;
    if (t > 0) acc.noalias() += weights_[t - 1] * x;
  }
  return acc;
}

void ProductChain::check_row_stochastic(double tol) const {
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    const auto& f = factors_[k];
    std::vector<Index> negative;
    for (Index i = 0; i < f.outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(f, i); it; ++it) {
        if (it.value() < 0.0 || !std::isfinite(it.value())) {
          negative.push_back(i);
          break;
        }
      }
    }
    if (!negative.empty())
      throw ValidationError("factor " + std::to_string(k) + " has negative or nonfinite entries in rows " +
                                format_rows(negative),
                            negative);
  }
  for (std::size_t t = 0; t < weights_.size(); ++t)
    if (weights_[t] < 0.0) throw ValidationError("negative prefix weight at step " + std::to_string(t));

  const DenseMatrix sums = apply(DenseMatrix::Ones(cols(), 1));
  std::vector<Index> bad;
  for (Index i = 0; i < sums.rows(); ++i)
    if (!(std::abs(sums(i, 0) - 1.0) <= tol)) bad.push_back(i);
  if (!bad.empty())
    throw ValidationError("operator rows do not sum to one: " + format_rows(bad), bad);
}

DenseMatrix ProductChain::materialize() const {
  return apply(DenseMatrix::Identity(cols(), cols()));
}

// ---------------------------------------------------------------------------

RegularizationWeights::RegularizationWeights(Vector p0) : p0_(std::move(p0)) {
  if (p0_.size() == 0) throw ValidationError("regularization weights are empty");
  std::vector<Index> bad;
  for (Index i = 0; i < p0_.size(); ++i)
    if (!(p0_[i] >= 0.0) || !std::isfinite(p0_[i])) bad.push_back(i);
  if (!bad.empty()) throw ValidationError("negative regularization weights at " + format_rows(bad), bad);
  const double total = p0_.sum();
  if (std::abs(total - 1.0) > 1e-12)
    throw ValidationError("regularization weights sum to " + std::to_string(total) + ", expected 1");
}

RegularizationWeights RegularizationWeights::uniform(Index n) {
  return RegularizationWeights(Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

SparseMatrix row_normalize(const SparseMatrix& a) {
  std::vector<Eigen::Triplet<double, Index>> out;
  out.reserve(static_cast<std::size_t>(a.nonZeros() + a.rows()));
  std::vector<Index> negative;
  std::vector<Index> dangling;
  for (Index i = 0; i < a.outerSize(); ++i) {
    double sum = 0.0;
    bool bad = false;
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
      if (it.value() < 0.0) bad = true;
      sum += it.value();
    }
    if (bad) {
      negative.push_back(i);
      continue;
    }
    if (sum == 0.0) {
      dangling.push_back(i);
      continue;
    }
    for (SparseMatrix::InnerIterator it(a, i); it; ++it)
      if (it.value() != 0.0) out.emplace_back(i, it.col(), it.value() / sum);
  }
  if (!negative.empty())
    throw ValidationError("negative entries in rows " + format_rows(negative), negative);
  if (!dangling.empty()) {
    if (a.rows() != a.cols())
      throw ValidationError("empty rows in a rectangular matrix: " + format_rows(dangling), dangling);
    for (Index i : dangling) out.emplace_back(i, i, 1.0);
  }
  return sparse_from_triplets(a.rows(), a.cols(), out);
}

DenseMatrix rescale_embedding(const DenseMatrix& x, RescaleMode mode) {
  const Vector norms = x.rowwise().norm();
  if (mode == RescaleMode::average_norm_one) {
    const double mean = norms.mean();
    if (!(mean > 0.0)) throw ValidationError("cannot rescale an all-zero embedding");
    return x / mean;
  }
  std::vector<Index> zero;
  for (Index i = 0; i < norms.size(); ++i)
    if (norms[i] == 0.0) zero.push_back(i);
  if (!zero.empty()) throw ValidationError("zero rows cannot be normalized: " + format_rows(zero), zero);
  DenseMatrix out = x;
  for (Index i = 0; i < x.rows(); ++i) out.row(i) /= norms[i];
  return out;
}

}  // namespace edrep
