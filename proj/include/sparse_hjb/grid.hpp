/*
 * Copyright 2026 The sparse-hjb Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/// @file
/// Uniform tensor grids on a box, multilinear interpolation with clamping,
/// and CSV (de)serialization of nodal fields.
///
/// Flattening is row-major with the last axis fastest.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sparse_hjb/errors.hpp"
#include "sparse_hjb/problem.hpp"

namespace sparse_hjb {

/// Shortest round-trip decimal representation of v.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc())
    throw IoError("failed to format floating-point value");
  return std::string(buf, end);
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t'))
    s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError("malformed number '" + std::string(s) + "'");
  return v;
}

class GridSpec {
public:
  GridSpec(Vec lo, Vec hi, std::vector<int> n_per_dim)
      : lo_(std::move(lo)), hi_(std::move(hi)), n_(std::move(n_per_dim)) {
    if (lo_.empty() || lo_.size() != hi_.size() || lo_.size() != n_.size())
      throw ArgumentError("grid corners and node counts must share a dimension");
    mesh_.resize(lo_.size());
    strides_.assign(lo_.size(), 1);
    for (std::size_t i = 0; i < lo_.size(); ++i) {
      if (!(hi_[i] > lo_[i]))
        throw ArgumentError("grid requires hi > lo in every dimension");
      if (n_[i] < 2)
        throw ArgumentError("grid requires at least 2 nodes per dimension");
      mesh_[i] = (hi_[i] - lo_[i]) / (n_[i] - 1);
    }
    for (std::size_t i = lo_.size() - 1; i > 0; --i)
      strides_[i - 1] = strides_[i] * static_cast<std::size_t>(n_[i]);
    count_ = strides_[0] * static_cast<std::size_t>(n_[0]);
  }

  /// Box [lo, hi]^d with the node count chosen so the spacing equals mesh.
  static GridSpec uniform(int d, double lo, double hi, double mesh) {
    if (!(mesh > 0.0))
      throw ArgumentError("mesh must be positive");
    const double cells = (hi - lo) / mesh;
    const int n = static_cast<int>(std::lround(cells)) + 1;
    if (std::abs(cells - std::round(cells)) > 1e-9)
      throw ArgumentError("mesh does not divide the domain evenly");
    return GridSpec(Vec(static_cast<std::size_t>(d), lo),
                    Vec(static_cast<std::size_t>(d), hi),
                    std::vector<int>(static_cast<std::size_t>(d), n));
  }

  int dim() const { return static_cast<int>(lo_.size()); }
  const Vec &lo() const { return lo_; }
  const Vec &hi() const { return hi_; }
  const std::vector<int> &n_per_dim() const { return n_; }
  const Vec &mesh() const { return mesh_; }
  std::size_t node_count() const { return count_; }
  std::size_t stride(int axis) const {
    return strides_[static_cast<std::size_t>(axis)];
  }

  double diameter() const {
    double s = 0.0;
    for (std::size_t i = 0; i < lo_.size(); ++i)
      s += (hi_[i] - lo_[i]) * (hi_[i] - lo_[i]);
    return std::sqrt(s);
  }

  double coordinate(int axis, int index) const {
    const auto a = static_cast<std::size_t>(axis);
    return lo_[a] + (hi_[a] - lo_[a]) * index / (n_[a] - 1);
  }

  std::vector<int> multi_index(std::size_t flat) const {
    if (flat >= count_)
      throw ArgumentError("flat index " + std::to_string(flat) +
                          " out of range");
    std::vector<int> idx(lo_.size());
    for (std::size_t i = 0; i < lo_.size(); ++i) {
      idx[i] = static_cast<int>(flat / strides_[i]);
      flat %= strides_[i];
    }
    return idx;
  }

  std::size_t flat_index(std::span<const int> idx) const {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < lo_.size(); ++i) {
      if (idx[i] < 0 || idx[i] >= n_[i])
        throw ArgumentError("multi-index out of range");
      flat += static_cast<std::size_t>(idx[i]) * strides_[i];
    }
    return flat;
  }

  Vec node_coords(std::size_t flat) const {
    const auto idx = multi_index(flat);
    Vec x(lo_.size());
    for (std::size_t i = 0; i < lo_.size(); ++i)
      x[i] = coordinate(static_cast<int>(i), idx[i]);
    return x;
  }

  /// Flat index of the node nearest to clamp(x).
  std::size_t nearest_index(std::span<const double> x) const {
    check_point(x);
    std::size_t flat = 0;
    for (std::size_t i = 0; i < lo_.size(); ++i) {
      const double t = (std::clamp(x[i], lo_[i], hi_[i]) - lo_[i]) / mesh_[i];
      const int k = std::clamp(static_cast<int>(std::lround(t)), 0, n_[i] - 1);
      flat += static_cast<std::size_t>(k) * strides_[i];
    }
    return flat;
  }

  Vec clamp(std::span<const double> x) const {
    check_point(x);
    Vec y(x.begin(), x.end());
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = std::clamp(y[i], lo_[i], hi_[i]);
    return y;
  }

  bool contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < lo_.size(); ++i)
      if (x[i] < lo_[i] || x[i] > hi_[i])
        return false;
    return true;
  }

  /// Cell of clamp(x): lower-corner flat index and per-axis fractions in
  /// [0, 1]. Points within 1e-10 cells of a node snap onto it.
  struct Cell {
    std::size_t base = 0;
    Vec frac;
  };

  Cell locate(std::span<const double> x) const {
    check_point(x);
    Cell cell;
    cell.frac.resize(lo_.size());
    for (std::size_t i = 0; i < lo_.size(); ++i) {
      const double xc = std::clamp(x[i], lo_[i], hi_[i]);
      double t = (xc - lo_[i]) / (hi_[i] - lo_[i]) * (n_[i] - 1);
      const double r = std::round(t);
      if (std::abs(t - r) < 1e-10)
        t = r;
      int k = static_cast<int>(std::floor(t));
      k = std::clamp(k, 0, n_[i] - 2);
      cell.base += static_cast<std::size_t>(k) * strides_[i];
      cell.frac[i] = std::clamp(t - k, 0.0, 1.0);
    }
    return cell;
  }

  friend bool operator==(const GridSpec &a, const GridSpec &b) {
    return a.lo_ == b.lo_ && a.hi_ == b.hi_ && a.n_ == b.n_;
  }

private:
  void check_point(std::span<const double> x) const {
    if (x.size() != lo_.size())
      throw ArgumentError("point dimension mismatch: expected " +
                          std::to_string(lo_.size()) + ", got " +
                          std::to_string(x.size()));
    for (double xi : x)
      if (!std::isfinite(xi))
        throw ArgumentError("non-finite query point");
  }

  Vec lo_, hi_;
  std::vector<int> n_;
  Vec mesh_;
  std::vector<std::size_t> strides_;
  std::size_t count_ = 0;
};

/// Multilinear interpolation of nodal values on a located cell. Corners with
/// zero weight are skipped, so nodal queries return the stored value exactly.
inline double interpolate_cell(const GridSpec &spec, std::span<const double> values,
                               const GridSpec::Cell &cell) {
  const int d = spec.dim();
  double acc = 0.0;
  const unsigned corners = 1u << d;
  for (unsigned mask = 0; mask < corners; ++mask) {
    double w = 1.0;
    std::size_t idx = cell.base;
    for (int i = 0; i < d; ++i) {
      const double f = cell.frac[static_cast<std::size_t>(i)];
      if (mask & (1u << i)) {
        w *= f;
        idx += spec.stride(i);
      } else {
        w *= 1.0 - f;
      }
    }
    if (w != 0.0)
      acc += w * values[idx];
  }
  return acc;
}

struct ValueField {
  GridSpec spec;
  Vec values;

  explicit ValueField(GridSpec s, double fill = 0.0)
      : spec(std::move(s)), values(spec.node_count(), fill) {}
  ValueField(GridSpec s, Vec v) : spec(std::move(s)), values(std::move(v)) {
    if (values.size() != spec.node_count())
      throw ArgumentError("value count does not match the grid");
  }

  double at(std::size_t flat) const { return values.at(flat); }
};

/// Multilinear interpolant of the field at clamp(x).
inline double interpolate(const ValueField &field, std::span<const double> x) {
  return interpolate_cell(field.spec, field.values, field.spec.locate(x));
}

inline Vec node_coords(const GridSpec &spec, std::size_t flat_index) {
  return spec.node_coords(flat_index);
}

/// Header `x1,...,xd,v`, one row per node in flat order. Values use the
/// shortest round-trip representation, so reading back is bit-exact.
inline void write_field_csv(const ValueField &field, const std::string &path) {
  if (path.empty())
    throw IoError("cannot write field: empty path");
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  const int d = field.spec.dim();
  for (int i = 0; i < d; ++i)
    out << 'x' << (i + 1) << ',';
  out << "v\n";
  for (std::size_t k = 0; k < field.spec.node_count(); ++k) {
    const Vec x = field.spec.node_coords(k);
    for (double xi : x)
      out << format_double(xi) << ',';
    out << format_double(field.values[k]) << '\n';
  }
  if (!out)
    throw IoError("write failed for '" + path + "'");
}

/// Reads a field written by write_field_csv. The grid is reconstructed from
/// the node coordinates, so the file must cover a full tensor grid.
inline ValueField read_field_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line))
    throw IoError("'" + path + "' is empty");
  const auto d = static_cast<std::size_t>(
      std::count(line.begin(), line.end(), ','));
  if (d == 0)
    throw IoError("'" + path + "' has no coordinate columns");
  std::vector<Vec> coords;
  Vec values;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    Vec row;
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(',', start);
      row.push_back(parse_double(std::string_view(line).substr(
          start, pos == std::string::npos ? std::string::npos : pos - start)));
      if (pos == std::string::npos)
        break;
      start = pos + 1;
    }
    if (row.size() != d + 1)
      throw IoError("'" + path + "': row has " + std::to_string(row.size()) +
                    " columns, expected " + std::to_string(d + 1));
    values.push_back(row.back());
    row.pop_back();
    coords.push_back(std::move(row));
  }
  if (coords.empty())
    throw IoError("'" + path + "' has no data rows");
  Vec lo = coords.front(), hi = coords.back();
  std::vector<int> n(d, 1);
  for (std::size_t i = 0; i < d; ++i) {
    Vec axis;
    for (const auto &c : coords)
      axis.push_back(c[i]);
    std::sort(axis.begin(), axis.end());
    n[i] = static_cast<int>(std::unique(axis.begin(), axis.end()) - axis.begin());
  }
  ValueField field(GridSpec(lo, hi, n), std::move(values));
  return field;
}

} // namespace sparse_hjb
