#include "edrep/matrix_io.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "test_util.hpp"

namespace edrep {
namespace {

namespace fs = std::filesystem;

class MatrixIo : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("edrep_io_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_text(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

  fs::path dir_;
};

TEST_F(MatrixIo, MatrixMarketRoundTripIsExact) {
  const SparseMatrix a = testing::random_sparse(17, 9, 0.3, 3);
  write_matrix_market(dir_ / "a.mtx", a);
  const SparseMatrix b = read_matrix_market(dir_ / "a.mtx");
  ASSERT_EQ(b.rows(), 17);
  ASSERT_EQ(b.cols(), 9);
  EXPECT_EQ(DenseMatrix(a), DenseMatrix(b));
}

TEST_F(MatrixIo, MatrixMarketSymmetricAndPattern) {
  const auto p = write_text("s.mtx",
                            "%%MatrixMarket matrix coordinate real symmetric\n"
                            "% comment\n"
                            "3 3 3\n"
                            "1 1 2.0\n"
                            "2 1 0.5\n"
                            "3 2 -1\n");
  const DenseMatrix s(read_matrix_market(p));
  DenseMatrix expected(3, 3);
  expected << 2, 0.5, 0, 0.5, 0, -1, 0, -1, 0;
  EXPECT_EQ(s, expected);

  const auto q = write_text("p.mtx",
                            "%%MatrixMarket matrix coordinate pattern general\n"
                            "2 2 2\n"
                            "1 2\n"
                            "2 1\n");
  const DenseMatrix pm(read_matrix_market(q));
  EXPECT_EQ(pm(0, 1), 1.0);
  EXPECT_EQ(pm(1, 0), 1.0);
  EXPECT_EQ(pm(0, 0), 0.0);
}

TEST_F(MatrixIo, MatrixMarketErrors) {
  EXPECT_THROW(read_matrix_market(dir_ / "missing.mtx"), IoError);
  EXPECT_THROW(read_matrix_market(write_text("h.mtx", "hello\n")), IoError);
  EXPECT_THROW(read_matrix_market(write_text("r.mtx",
                                             "%%MatrixMarket matrix coordinate real general\n"
                                             "2 2 1\n"
                                             "3 1 1.0\n")),
               IoError);
  EXPECT_THROW(read_matrix_market(write_text("c.mtx",
                                             "%%MatrixMarket matrix coordinate real general\n"
                                             "2 2 2\n"
                                             "1 1 1.0\n")),
               IoError);
}

TEST_F(MatrixIo, CsvRoundTripIsExact) {
  const DenseMatrix x = testing::random_dense(13, 5, 8);
  write_dense_csv(dir_ / "x.csv", x);
  EXPECT_EQ(read_dense_csv(dir_ / "x.csv"), x);
  EXPECT_EQ(read_dense(dir_ / "x.csv"), x);
}

TEST_F(MatrixIo, CsvErrors) {
  EXPECT_THROW(read_dense_csv(write_text("ragged.csv", "1,2\n3\n")), IoError);
  EXPECT_THROW(read_dense_csv(write_text("text.csv", "1,abc\n")), IoError);
  EXPECT_THROW(read_dense_csv(write_text("empty.csv", "")), IoError);
}

TEST_F(MatrixIo, BinaryLayout) {
  DenseMatrix x(2, 3);
  x << 1, 2, 3, 4, 5, 6.5;
  write_dense_binary(dir_ / "x.edr", x);
  std::ifstream in(dir_ / "x.edr", std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ASSERT_EQ(bytes.size(), 4u + 16u + 6u * 8u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "EDR1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2);  // rows, little endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 3);  // cols
  double last;
  std::memcpy(&last, bytes.data() + 20 + 5 * 8, 8);
  EXPECT_EQ(last, 6.5);  // row-major: (1, 2) is the last value
  EXPECT_EQ(read_dense_binary(dir_ / "x.edr"), x);
  EXPECT_EQ(read_dense(dir_ / "x.edr"), x);
}

TEST_F(MatrixIo, BinaryErrors) {
  EXPECT_THROW(read_dense_binary(write_text("bad.edr", "EDR2xxxxxxxxxxxxxxxx")), IoError);
  const DenseMatrix x = testing::random_dense(4, 4, 1);
  write_dense_binary(dir_ / "t.edr", x);
  fs::resize_file(dir_ / "t.edr", fs::file_size(dir_ / "t.edr") - 8);
  EXPECT_THROW(read_dense_binary(dir_ / "t.edr"), IoError);
}

TEST_F(MatrixIo, LabelsAreOneBasedOnDisk) {
  const std::vector<int> labels{0, 2, 1, 1};
  write_labels(dir_ / "l.txt", labels);
  std::ifstream in(dir_ / "l.txt");
  std::string first;
  in >> first;
  EXPECT_EQ(first, "1");
  EXPECT_EQ(read_labels(dir_ / "l.txt"), labels);
  EXPECT_THROW(read_labels(write_text("z.txt", "1\n0\n")), IoError);
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 6.02214076e23}) EXPECT_EQ(std::stod(format_double(v)), v);
}

}  // namespace
}  // namespace edrep
