#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "lhalf/numerics.hpp"

namespace lhalf {

/// Malformed input. The message starts with "source:line:column:".
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure to open or write a file.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 17 significant digits, enough for an exact double round trip.
std::string format_number(double v);

/// Parses comma-separated rows, '.' decimal point, no header. Every row must
/// have the same number of fields.
DenseMatrix parse_matrix_csv(std::string_view text, std::string_view source = "<input>");

/// A vector is stored one value per line; a single-row file is accepted too.
DenseVector parse_vector_csv(std::string_view text, std::string_view source = "<input>");

DenseMatrix read_matrix_csv(const std::filesystem::path& path);
DenseVector read_vector_csv(const std::filesystem::path& path);

void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m);
void write_vector_csv(const std::filesystem::path& path, const DenseVector& v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace lhalf
