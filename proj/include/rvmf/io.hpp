#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rvmf/core.hpp"

namespace rvmf::io {

enum class InputFormat {
  UnitVectors,
  AnglesRadians,
  AnglesDegrees,
  RawRowsNormalize
};

inline InputFormat parse_format(const std::string& name) {
  if (name == "unit_vectors") return InputFormat::UnitVectors;
  if (name == "angles_radians") return InputFormat::AnglesRadians;
  if (name == "angles_degrees") return InputFormat::AnglesDegrees;
  if (name == "raw_rows_normalize") return InputFormat::RawRowsNormalize;
  throw io_error("unknown input format: " + name);
}

/// Parses a numeric CSV file into rows; enforces consistent width and
/// finite entries, reporting the offending row on failure.
inline std::vector<std::vector<double>> read_csv(const std::string& path,
                                                 bool skip_header = false) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (skip_header && rows.empty() && lineno == 1) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(cell[used])) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        if (!std::isfinite(v))
          throw io_error(path + ": non-finite entry at row " +
                         std::to_string(lineno));
        row.push_back(v);
      } catch (const std::invalid_argument&) {
        throw io_error(path + ": malformed number '" + cell + "' at row " +
                       std::to_string(lineno));
      }
    }
    if (row.empty())
      throw io_error(path + ": empty row " + std::to_string(lineno));
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw io_error(path + ": inconsistent width at row " +
                     std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw io_error(path + ": no data rows");
  return rows;
}

/// Reads a file into a Dataset under the given interpretation.
inline Dataset ingest(const std::string& path, InputFormat format,
                      bool skip_header = false) {
  const auto rows = read_csv(path, skip_header);
  const int n = static_cast<int>(rows.size());
  Dataset data;
  switch (format) {
    case InputFormat::AnglesRadians:
    case InputFormat::AnglesDegrees: {
      data.points.resize(n, 2);
      for (int i = 0; i < n; ++i) {
        if (rows[i].size() != 1)
          throw io_error(path + ": angle formats need one column (row " +
                         std::to_string(i + 1) + ")");
        double theta = rows[i][0];
        if (format == InputFormat::AnglesDegrees) theta *= M_PI / 180.0;
        data.points(i, 0) = std::cos(theta);
        data.points(i, 1) = std::sin(theta);
      }
      break;
    }
    case InputFormat::UnitVectors: {
      const int p = static_cast<int>(rows[0].size());
      if (p < 2) throw io_error(path + ": unit vectors need >= 2 columns");
      data.points.resize(n, p);
      for (int i = 0; i < n; ++i) {
        Eigen::Map<const Vector> v(rows[i].data(), p);
        const double norm = v.norm();
        if (std::abs(norm - 1.0) > kUnitNormTol)
          throw io_error(path + ": row " + std::to_string(i + 1) +
                         " has norm " + std::to_string(norm) +
                         ", not a unit vector");
        // leave rows that are unit to machine precision untouched, so a
        // sample -> write -> ingest round trip is bit exact
        if (std::abs(norm - 1.0) > 1e-12)
          data.points.row(i) = v / norm;
        else
          data.points.row(i) = v;
      }
      break;
    }
    case InputFormat::RawRowsNormalize: {
      const int p = static_cast<int>(rows[0].size());
      if (p < 2) throw io_error(path + ": raw rows need >= 2 columns");
      data.points.resize(n, p);
      for (int i = 0; i < n; ++i) {
        Eigen::Map<const Vector> z(rows[i].data(), p);
        Vector centered = z.array() - z.mean();
        const double norm = centered.norm();
        if (norm <= 0.0)
          throw io_error(path + ": row " + std::to_string(i + 1) +
                         " has zero centered norm");
        data.points.row(i) = centered / norm;
      }
      break;
    }
  }
  return data;
}

/// Writes content to path atomically (write-temp-then-rename).
inline void write_file_atomic(const std::string& path,
                              const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Serialises a dataset as one observation per row.
inline std::string dataset_csv(const Dataset& data) {
  std::string out;
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.p(); ++j) {
      if (j) out += ',';
      out += format_double(data.points(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace rvmf::io
