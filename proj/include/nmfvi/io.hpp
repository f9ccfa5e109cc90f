#pragma once

#include <string>

#include "nmfvi/glm.hpp"

namespace nmfvi::io {

/// Shortest decimal string that parses back to the same double.
std::string format_double(double x);

/// Comma-separated rows, no header.
void write_matrix_csv(const std::string& path, const Matrix& M);
Matrix read_matrix_csv(const std::string& path);

/// One value per line.
void write_vector_csv(const std::string& path, const Vector& v);
Vector read_vector_csv(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace nmfvi::io
