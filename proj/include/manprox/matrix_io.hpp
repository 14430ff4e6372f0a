#pragma once

#include "manprox/types.hpp"

#include <string>

namespace manprox {

/// Text format: first line "rows,cols", then one line per matrix row with
/// comma-separated values printed to round-trip precision.
void write_matrix_csv(const std::string& path, const Mat& a);
Mat read_matrix_csv(const std::string& path);

/// Binary format, little-endian: magic "MPX1", u64 rows, u64 cols, then
/// rows*cols f64 values in row-major order.
void write_matrix_binary(const std::string& path, const Mat& a);
Mat read_matrix_binary(const std::string& path);

/// Dispatches on the file: binary when it starts with the magic, CSV otherwise.
Mat read_matrix(const std::string& path);
/// Dispatches on the extension: ".bin" / ".mpx" binary, anything else CSV.
void write_matrix(const std::string& path, const Mat& a);

}  // namespace manprox
