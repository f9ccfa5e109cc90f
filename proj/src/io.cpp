#include "nmfvi/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace nmfvi::io {

namespace {

double parse_double(std::string_view s, const std::string& path, std::size_t line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParameterError(path + ":" + std::to_string(line) + ": cannot parse '" + std::string(s) + "'");
  return x;
}

std::vector<std::vector<double>> read_rows(const std::string& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      row.push_back(parse_double(std::string_view(line).substr(start, comma - start), path, lineno));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ShapeError(path + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write " + path);
  out << text;
}

void write_matrix_csv(const std::string& path, const Matrix& M) {
  std::string s;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) s += ',';
      s += format_double(M(i, j));
    }
    s += '\n';
  }
  write_text(path, s);
}

Matrix read_matrix_csv(const std::string& path) {
  const auto rows = read_rows(path);
  if (rows.empty()) return Matrix(0, 0);
  Matrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return M;
}

void write_vector_csv(const std::string& path, const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += format_double(v[i]) + '\n';
  write_text(path, s);
}

Vector read_vector_csv(const std::string& path) {
  const auto rows = read_rows(path);
  Vector v(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 1) throw ShapeError(path + ": expected one value per line");
    v[static_cast<Eigen::Index>(i)] = rows[i][0];
  }
  return v;
}

}  // namespace nmfvi::io
