#include "manprox/matrix_io.hpp"
#include "manprox/problems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace manprox;
namespace fs = std::filesystem;

namespace {

class MatrixIo : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("manprox_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write_text(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
  }

  fs::path dir_;
};

bool bit_equal(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

Mat awkward_values() {
  Mat a = gen_random(4, 5, 9);
  a(0, 0) = 0.1;
  a(0, 1) = -0.0;
  a(1, 0) = 1e-310;
  a(1, 1) = std::numeric_limits<double>::max();
  a(2, 0) = std::numeric_limits<double>::min();
  a(2, 1) = 1.0 / 3.0;
  a(3, 4) = -123456789.123456789;
  return a;
}

}  // namespace

TEST_F(MatrixIo, CsvRoundTripIsExact) {
  const Mat a = awkward_values();
  write_matrix_csv(path("a.csv"), a);
  EXPECT_TRUE(bit_equal(read_matrix_csv(path("a.csv")), a));
  EXPECT_TRUE(bit_equal(read_matrix(path("a.csv")), a));
}

TEST_F(MatrixIo, CsvLayout) {
  Mat a(2, 3);
  a << 1, 0.5, -2, 0.1, 3, 4;
  write_matrix_csv(path("b.csv"), a);
  std::ifstream in(path("b.csv"));
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(text, "2,3\n1,0.5,-2\n0.1,3,4\n");
}

TEST_F(MatrixIo, CsvToleratesSpacesAndCarriageReturns) {
  write_text("c.csv", "2,2\r\n 1.5 ,2\r\n3,\t-4\r\n");
  Mat expect(2, 2);
  expect << 1.5, 2, 3, -4;
  EXPECT_EQ(read_matrix_csv(path("c.csv")), expect);
}

TEST_F(MatrixIo, BinaryRoundTripIsBitExact) {
  Mat a = awkward_values();
  a(3, 0) = std::numeric_limits<double>::quiet_NaN();
  a(3, 1) = std::numeric_limits<double>::infinity();
  a(3, 2) = -std::numeric_limits<double>::infinity();
  write_matrix_binary(path("a.bin"), a);
  EXPECT_TRUE(bit_equal(read_matrix_binary(path("a.bin")), a));
  EXPECT_TRUE(bit_equal(read_matrix(path("a.bin")), a));
}

TEST_F(MatrixIo, BinaryHeaderAndRowMajorOrder) {
  Mat a(2, 3);
  a << 1, 2, 3, 4, 5, 6;
  write_matrix_binary(path("h.bin"), a);
  std::ifstream in(path("h.bin"), std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ASSERT_EQ(bytes.size(), 4u + 16u + 48u);
  EXPECT_EQ(bytes.substr(0, 4), "MPX1");
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::memcpy(&rows, bytes.data() + 4, 8);
  std::memcpy(&cols, bytes.data() + 12, 8);
  EXPECT_EQ(rows, 2u);
  EXPECT_EQ(cols, 3u);
  double values[6];
  std::memcpy(values, bytes.data() + 20, 48);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(values[i], i + 1.0);
}

TEST_F(MatrixIo, DispatchOnExtensionAndMagic) {
  const Mat a = gen_random(3, 2, 1);
  write_matrix(path("x.bin"), a);
  write_matrix(path("x.mpx"), a);
  write_matrix(path("x.csv"), a);
  write_matrix(path("x.txt"), a);
  for (const char* name : {"x.bin", "x.mpx"}) {
    std::ifstream in(path(name), std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    EXPECT_EQ(std::string(magic, 4), "MPX1") << name;
  }
  for (const char* name : {"x.bin", "x.mpx", "x.csv", "x.txt"}) EXPECT_TRUE(bit_equal(read_matrix(path(name)), a)) << name;
  // A binary file with a CSV-looking name is still read as binary.
  write_matrix_binary(path("binary.csv"), a);
  EXPECT_TRUE(bit_equal(read_matrix(path("binary.csv")), a));
}

TEST_F(MatrixIo, Errors) {
  EXPECT_THROW(read_matrix(path("missing.csv")), IoError);
  EXPECT_THROW(read_matrix_binary(path("missing.bin")), IoError);
  write_text("empty.csv", "");
  EXPECT_THROW(read_matrix_csv(path("empty.csv")), IoError);
  write_text("header.csv", "2\n1\n2\n");
  EXPECT_THROW(read_matrix_csv(path("header.csv")), IoError);
  write_text("short.csv", "2,2\n1,2\n");
  EXPECT_THROW(read_matrix_csv(path("short.csv")), IoError);
  write_text("wide.csv", "1,2\n1,2,3\n");
  EXPECT_THROW(read_matrix_csv(path("wide.csv")), IoError);
  write_text("nan.csv", "1,2\n1,abc\n");
  EXPECT_THROW(read_matrix_csv(path("nan.csv")), IoError);
  write_text("bad.bin", "MPX2aaaaaaaaaaaaaaaa");
  EXPECT_THROW(read_matrix_binary(path("bad.bin")), IoError);
  write_text("trunc.bin", std::string("MPX1") + std::string(10, '\0'));
  EXPECT_THROW(read_matrix_binary(path("trunc.bin")), IoError);

  Mat a = gen_random(2, 2, 1);
  write_matrix_binary(path("cut.bin"), a);
  fs::resize_file(path("cut.bin"), 4 + 16 + 8);
  EXPECT_THROW(read_matrix_binary(path("cut.bin")), IoError);
  EXPECT_THROW(write_matrix_csv((dir_ / "no_such_dir" / "a.csv").string(), a), IoError);
}
