#pragma once

// Matrix files.
//
// CSV:    first line `# dims=<d>`, then one line of d comma-separated tokens
//         per example. Missing entries are written as `*`; `*` and `NA` are
//         both accepted on input. Values are written with 17 significant
//         digits.
// Binary: magic "RIMM1", little-endian u64 N, u64 d, then d * ceil(N/8) mask
//         bytes (column-major, bit i%8 of byte i/8 is row i), then the present
//         values as little-endian f64 in column-major present order.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "rime/dataset.hpp"

namespace rime {

enum class MatrixFormat { csv, binary };

IncompleteMatrix read_csv(std::istream& in);
void write_csv(std::ostream& out, const IncompleteMatrix& m);

IncompleteMatrix read_binary(std::istream& in);
void write_binary(std::ostream& out, const IncompleteMatrix& m);

IncompleteMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
void store_matrix(const IncompleteMatrix& m, const std::filesystem::path& path, MatrixFormat format);

// Sniffs the binary magic; anything else is treated as CSV.
MatrixFormat detect_format(const std::filesystem::path& path);
IncompleteMatrix load_matrix(const std::filesystem::path& path);

// A single CSV line of 17-significant-digit values, no trailing newline.
std::string format_vector(std::span<const double> v);

}  // namespace rime
