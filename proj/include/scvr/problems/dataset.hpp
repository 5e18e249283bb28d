#pragma once

// Dense sample matrices: CSV I/O, column normalization and PCA.
//
// CSV format: UTF-8, one sample per line, comma-separated decimal floats.
// An optional first line starting with '#' is a header and is skipped.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "scvr/core.hpp"

namespace scvr {

struct Dataset {
  Eigen::MatrixXd values;  // rows = samples, cols = features

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Parses CSV text. `source` names the input in error messages.
inline Dataset parse_matrix(std::istream& in, const std::string& source = "<stream>") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = detail::trim(line);
    if (line_no == 1 && !view.empty() && view.front() == '#') continue;
    if (view.empty()) continue;
    std::vector<double> row;
    std::size_t column = 0;
    while (true) {
      ++column;
      const auto comma = view.find(',');
      const std::string_view field = detail::trim(view.substr(0, comma));
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() ||
          !std::isfinite(value))
        throw ParseError(source + ":" + std::to_string(line_no) + ":" + std::to_string(column) +
                             ": invalid number '" + std::string(field) + "'",
                         line_no, column);
      row.push_back(value);
      if (comma == std::string_view::npos) break;
      view.remove_prefix(comma + 1);
    }
    if (width == 0) {
      width = row.size();
    } else if (row.size() != width) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": row " +
                           std::to_string(rows.size() + 1) + " has " + std::to_string(row.size()) +
                           " fields, expected " + std::to_string(width),
                       line_no);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(source + ": no data rows", line_no);
  Dataset out;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c)
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return out;
}

inline Dataset load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  return parse_matrix(in, path);
}

inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& m,
                         const std::string& header = {}) {
  if (!header.empty()) out << '#' << header << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << detail::format_double(m(r, c));
    }
    out << '\n';
  }
}

inline void save_matrix(const std::string& path, const Eigen::MatrixXd& m,
                        const std::string& header = {}) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'", 0);
  write_matrix(out, m, header);
}

/// Zero-mean, unit-standard-deviation columns (population std). Columns with
/// zero variance are only centered.
inline Dataset normalize(const Dataset& data) {
  if (data.rows() < 2) throw ArgumentError("normalize: need at least 2 rows");
  Dataset out = data;
  const double rows = static_cast<double>(data.rows());
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    auto col = out.values.col(c);
    const double mean = col.sum() / rows;
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / rows);
    if (sd > 0.0) col /= sd;
  }
  return out;
}

/// Projection of the centered data onto its top-k principal directions.
/// Each direction's sign is chosen so its largest-magnitude loading is
/// positive.
inline Dataset pca_reduce(const Dataset& data, Eigen::Index k) {
  if (k < 1 || k > std::min(data.rows() - 1, data.cols()))
    throw ArgumentError("pca_reduce: k must be in [1, min(rows - 1, cols)]");
  Eigen::MatrixXd centered = data.values.rowwise() - data.values.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  Eigen::MatrixXd basis = svd.matrixV().leftCols(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, c) < 0) basis.col(c) *= -1.0;
  }
  return Dataset{centered * basis};
}

}  // namespace scvr
