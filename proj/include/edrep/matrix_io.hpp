#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "edrep/matstore.hpp"

namespace edrep {

/// File missing, unreadable, or malformed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// MatrixMarket coordinate format. Reads real, integer and pattern fields
// with general or symmetric storage; writes "real general" with 17
// significant digits.
SparseMatrix read_matrix_market(const std::filesystem::path& path);
void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& m);

// Headerless comma-separated rows.
DenseMatrix read_dense_csv(const std::filesystem::path& path);
void write_dense_csv(const std::filesystem::path& path, const DenseMatrix& m);

// Binary layout: "EDR1", rows and cols as little-endian uint64, then
// rows * cols little-endian float64 in row-major order.
DenseMatrix read_dense_binary(const std::filesystem::path& path);
void write_dense_binary(const std::filesystem::path& path, const DenseMatrix& m);

/// Picks the binary reader when the file starts with the magic bytes, CSV otherwise.
DenseMatrix read_dense(const std::filesystem::path& path);

// One label per line, 1-based. In memory labels are 0-based.
std::vector<int> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<int>& labels);

/// Formats a double so that it round-trips exactly.
std::string format_double(double v);

}  // namespace edrep
