#include "manprox/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace manprox {

namespace {

constexpr std::array<char, 4> kMagic = {'M', 'P', 'X', '1'};

static_assert(std::endian::native == std::endian::little,
              "binary matrix I/O assumes a little-endian host");

std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

double parse_double(std::string_view s, const std::string& path) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError(path + ": cannot parse number '" + std::string(s) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool has_suffix(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void write_matrix_csv(const std::string& path, const Mat& a) {
  std::ofstream out = open_out(path, std::ios::out | std::ios::trunc);
  out << a.rows() << "," << a.cols() << "\n";
  std::array<char, 32> buf{};
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (j > 0) out << ",";
      const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), a(i, j));
      out.write(buf.data(), ptr - buf.data());
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

Mat read_matrix_csv(const std::string& path) {
  std::ifstream in = open_in(path, std::ios::in);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  const auto header = split(line);
  if (header.size() != 2) throw IoError(path + ": header must be 'rows,cols'");
  const auto rows = static_cast<Index>(parse_double(header[0], path));
  const auto cols = static_cast<Index>(parse_double(header[1], path));
  if (rows < 0 || cols < 0) throw IoError(path + ": negative dimensions");
  Mat a(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) throw IoError(path + ": missing row " + std::to_string(i));
    const auto fields = split(line);
    if (static_cast<Index>(fields.size()) != cols) {
      throw IoError(path + ": row " + std::to_string(i) + " has wrong number of columns");
    }
    for (Index j = 0; j < cols; ++j) a(i, j) = parse_double(fields[static_cast<std::size_t>(j)], path);
  }
  return a;
}

void write_matrix_binary(const std::string& path, const Mat& a) {
  std::ofstream out = open_out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  out.write(kMagic.data(), kMagic.size());
  const auto rows = static_cast<std::uint64_t>(a.rows());
  const auto cols = static_cast<std::uint64_t>(a.cols());
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major = a;
  out.write(reinterpret_cast<const char*>(row_major.data()),
            static_cast<std::streamsize>(sizeof(double) * row_major.size()));
  if (!out) throw IoError("write failed: " + path);
}

Mat read_matrix_binary(const std::string& path) {
  std::ifstream in = open_in(path, std::ios::in | std::ios::binary);
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw IoError(path + ": bad magic, expected MPX1");
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!in) throw IoError(path + ": truncated header");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major(
      static_cast<Index>(rows), static_cast<Index>(cols));
  in.read(reinterpret_cast<char*>(row_major.data()),
          static_cast<std::streamsize>(sizeof(double) * row_major.size()));
  if (!in) throw IoError(path + ": truncated data");
  return row_major;
}

Mat read_matrix(const std::string& path) {
  std::ifstream in = open_in(path, std::ios::in | std::ios::binary);
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in && magic == kMagic) return read_matrix_binary(path);
  return read_matrix_csv(path);
}

void write_matrix(const std::string& path, const Mat& a) {
  if (has_suffix(path, ".bin") || has_suffix(path, ".mpx")) {
    write_matrix_binary(path, a);
  } else {
    write_matrix_csv(path, a);
  }
}

}  // namespace manprox
