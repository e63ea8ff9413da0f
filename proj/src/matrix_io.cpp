#include "edrep/matrix_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace edrep {
namespace {

constexpr std::array<char, 4> kMagic = {'E', 'D', 'R', '1'};

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view tok, const std::filesystem::path& path, std::size_t line) {
  tok = trim(tok);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
    throw IoError(path.string() + ":" + std::to_string(line) + ": not a number: '" + std::string(tok) + "'");
  return v;
}

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in, const std::filesystem::path& path) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), bytes.size())) throw IoError(path.string() + ": truncated binary matrix");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf;
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw IoError("cannot format number");
  return std::string(buf.data(), ptr);
}

SparseMatrix read_matrix_market(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  ++lineno;
  std::istringstream header(lower(line));
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%matrixmarket" || object != "matrix" || format != "coordinate")
    throw IoError(path.string() + ": expected a MatrixMarket coordinate header");
  const bool pattern = field == "pattern";
  if (!pattern && field != "real" && field != "integer" && field != "double")
    throw IoError(path.string() + ": unsupported field '" + field + "'");
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw IoError(path.string() + ": unsupported symmetry '" + symmetry + "'");

  Index rows = -1, cols = -1, entries = -1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '%') continue;
    std::istringstream size_line{std::string(t)};
    if (!(size_line >> rows >> cols >> entries) || rows < 0 || cols < 0 || entries < 0)
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad size line");
    break;
  }
  if (rows < 0) throw IoError(path.string() + ": missing size line");

  std::vector<Eigen::Triplet<double, Index>> triplets;
  triplets.reserve(static_cast<std::size_t>(symmetric ? 2 * entries : entries));
  Index seen = 0;
  while (seen < entries && std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '%') continue;
    std::istringstream entry{std::string(t)};
    Index i = 0, j = 0;
    double v = 1.0;
    if (!(entry >> i >> j) || (!pattern && !(entry >> v)))
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad entry");
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": index out of range");
    if (!std::isfinite(v)) throw IoError(path.string() + ":" + std::to_string(lineno) + ": nonfinite value");
    triplets.emplace_back(i - 1, j - 1, v);
    if (symmetric && i != j) triplets.emplace_back(j - 1, i - 1, v);
    ++seen;
  }
  if (seen != entries)
    throw IoError(path.string() + ": expected " + std::to_string(entries) + " entries, found " +
                  std::to_string(seen));
  return sparse_from_triplets(rows, cols, triplets);
}

void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& m) {
  auto out = open_out(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (Index i = 0; i < m.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(m, i); it; ++it)
      out << i + 1 << ' ' << it.col() + 1 << ' ' << format_double(it.value()) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

DenseMatrix read_dense_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    Index count = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = t.find(',', start);
      values.push_back(parse_double(t.substr(start, comma - start), path, lineno));
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols < 0) cols = count;
    if (count != cols)
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                    " columns, found " + std::to_string(count));
    ++rows;
  }
  if (rows == 0) throw IoError(path.string() + ": no rows");
  DenseMatrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

void write_dense_csv(const std::filesystem::path& path, const DenseMatrix& m) {
  auto out = open_out(path);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

DenseMatrix read_dense_binary(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  std::array<char, 4> magic;
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw IoError(path.string() + ": missing EDR1 magic");
  const auto rows = get_le<std::uint64_t>(in, path);
  const auto cols = get_le<std::uint64_t>(in, path);
  const auto expected = std::filesystem::file_size(path);
  if (cols != 0 && rows > (expected / 8) / cols) throw IoError(path.string() + ": size header exceeds file");
  if (16 + 4 + rows * cols * 8 != expected) throw IoError(path.string() + ": file size does not match header");
  DenseMatrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = get_le<double>(in, path);
  return m;
}

void write_dense_binary(const std::filesystem::path& path, const DenseMatrix& m) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Index k = 0; k < m.size(); ++k) put_le<double>(out, m.data()[k]);
  if (!out) throw IoError("write failed: " + path.string());
}

DenseMatrix read_dense(const std::filesystem::path& path) {
  std::array<char, 4> magic{};
  {
    auto in = open_in(path, std::ios::binary);
    in.read(magic.data(), magic.size());
  }
  return magic == kMagic ? read_dense_binary(path) : read_dense_csv(path);
}

std::vector<int> read_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    int v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || v < 1)
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected a positive integer label");
    labels.push_back(v - 1);
  }
  return labels;
}

void write_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
  auto out = open_out(path);
  for (int l : labels) out << l + 1 << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace edrep
