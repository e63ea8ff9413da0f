#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace edrep {

using Index = std::int64_t;

/// Row-major dense storage; rows are embedding vectors.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Compressed sparse row storage.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;
using Vector = Eigen::VectorXd;

/// Non-conformable operands. `factor()` names the offending chain factor
/// (position in written order, leftmost first) when one is involved.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what, std::optional<std::size_t> factor = std::nullopt)
      : std::invalid_argument(what), factor_(factor) {}
  std::optional<std::size_t> factor() const { return factor_; }

 private:
  std::optional<std::size_t> factor_;
};

/// Input that violates a documented precondition. `rows()` lists offending
/// row indices when the check is row-oriented.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what, std::vector<Index> rows = {})
      : std::invalid_argument(what), rows_(std::move(rows)) {}
  const std::vector<Index>& rows() const { return rows_; }

 private:
  std::vector<Index> rows_;
};

/// Computation left the representable floating point range.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Formats at most `limit` indices as "3, 17, 42 (+5 more)".
std::string format_rows(const std::vector<Index>& rows, std::size_t limit = 20);

void require_finite(const DenseMatrix& m, const char* what);

/// Linear operator P = P_m ... P_1 held as sparse factors and never
/// materialized. Factors are given in written order (leftmost first) and
/// applied right to left.
///
/// With prefix weights w_1..w_m the operator is the weighted sum of chain
/// prefixes, sum_t w_t P_t ... P_1; all factors must then be square and of
/// the same size.
class ProductChain {
 public:
  ProductChain() = default;
  explicit ProductChain(std::vector<SparseMatrix> factors);
  ProductChain(std::vector<SparseMatrix> factors, std::vector<double> prefix_weights);

  static ProductChain identity(Index n);

  Index rows() const;
  Index cols() const;
  /// Total stored nonzeros across factors; the per-application cost is nnz * d.
  Index nnz() const;
  bool weighted() const { return !weights_.empty(); }
  const std::vector<SparseMatrix>& factors() const { return factors_; }
  const std::vector<double>& prefix_weights() const { return weights_; }

  /// P * x.
  DenseMatrix apply(const DenseMatrix& x) const;
  /// P^T * x, using the transposed factors in reverse order.
  DenseMatrix apply_transpose(const DenseMatrix& x) const;

  /// Throws ValidationError listing offending rows unless every factor is
  /// nonnegative and the effective operator has unit row sums within `tol`.
  void check_row_stochastic(double tol = 1e-9) const;

  /// Dense P. Quadratic memory; used by oracles and small exact runs.
  DenseMatrix materialize() const;

 private:
  void check_conformable() const;

  std::vector<SparseMatrix> factors_;
  std::vector<double> weights_;
};

/// Nonnegative weights p0 summing to one.
class RegularizationWeights {
 public:
  explicit RegularizationWeights(Vector p0);
  static RegularizationWeights uniform(Index n);

  const Vector& values() const { return p0_; }
  Index size() const { return p0_.size(); }

 private:
  Vector p0_;
};

/// Divides each row by its sum. Rows with zero sum become a unit self-loop
/// (square matrices only). Negative entries are rejected.
SparseMatrix row_normalize(const SparseMatrix& a);

enum class RescaleMode { average_norm_one, unit_rows };

DenseMatrix rescale_embedding(const DenseMatrix& x, RescaleMode mode);

/// Builds a sparse matrix from (row, col, value) triplets; duplicates are summed.
SparseMatrix sparse_from_triplets(Index rows, Index cols,
                                  const std::vector<Eigen::Triplet<double, Index>>& triplets);

}  // namespace edrep
