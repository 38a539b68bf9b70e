// Copyright 2026 The dppm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dppm/binary_io.hpp"
#include "dppm/dataset.hpp"
#include "dppm/errors.hpp"

namespace dppm::harness {

inline constexpr std::uint32_t kTensorFormatVersion = 1;

// Row-major tensor of 32-bit floats on disk, held as doubles in memory.
struct Tensor {
  std::vector<std::size_t> dims;
  std::vector<double> values;

  std::size_t element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

// magic "DPPM" | u32 version | u32 rank | u32 dims[rank] | f32 payload (LE).
inline void write_tensor(std::ostream& os, const Tensor& t) {
  require(!t.dims.empty(), "write_tensor: rank must be at least 1");
  require_dims(t.values.size() == t.element_count(), "write_tensor: payload does not match dims");
  binary::write_magic(os);
  binary::write_u32(os, kTensorFormatVersion);
  binary::write_u32(os, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) binary::write_u32(os, static_cast<std::uint32_t>(d));
  for (double v : t.values) {
    if (!std::isfinite(v)) throw NumericalError("write_tensor: non-finite value");
    binary::write_f32(os, v);
  }
  if (!os) throw FormatError("write_tensor: write failed");
}

inline Tensor read_tensor(std::istream& is) {
  binary::expect_magic(is);
  const auto version = binary::read_u32(is);
  if (version != kTensorFormatVersion) {
    throw FormatError("tensor: unsupported format version " + std::to_string(version));
  }
  const auto rank = binary::read_u32(is);
  if (rank == 0 || rank > 8) throw FormatError("tensor: bad rank " + std::to_string(rank));
  Tensor t;
  for (std::uint32_t i = 0; i < rank; ++i) t.dims.push_back(binary::read_u32(is));
  const std::size_t n = t.element_count();
  t.values.resize(n);
  for (auto& v : t.values) v = binary::read_f32(is);
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("tensor: trailing bytes");
  return t;
}

inline void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open '" + path.string() + "' for writing");
  write_tensor(os, t);
}

inline Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open '" + path.string() + "'");
  return read_tensor(is);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto a = cell.find_first_not_of(" \t\r");
    const auto b = cell.find_last_not_of(" \t\r");
    cells.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_number(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw FormatError(where + ": '" + s + "' is not a number");
  return v;
}

inline std::size_t parse_index(const std::string& s, const std::string& where) {
  const double v = parse_number(s, where);
  if (v < 0.0 || v != std::floor(v)) throw FormatError(where + ": '" + s + "' is not a class index");
  return static_cast<std::size_t>(v);
}

// Shortest text that reads back as exactly `v`.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace detail

// CSV with a header row; every column except `label` is a feature.
inline Dataset read_csv_dataset(std::istream& is, const std::string& name) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError(name + ": empty CSV");
  const auto header = detail::split_csv_line(line);
  std::size_t label_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "label") label_col = c;
  }
  if (label_col == header.size()) throw FormatError(name + ": CSV has no 'label' column");
  Dataset d;
  d.name = name;
  d.dim = header.size() - 1;
  if (d.dim == 0) throw FormatError(name + ": CSV has no feature columns");
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    const std::string where = name + " row " + std::to_string(row);
    if (cells.size() != header.size()) throw FormatError(where + ": wrong number of columns");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_col) {
        d.labels.push_back(detail::parse_index(cells[c], where));
      } else {
        d.features.push_back(detail::parse_number(cells[c], where));
      }
    }
  }
  for (auto y : d.labels) d.n_classes = std::max(d.n_classes, y + 1);
  d.fit_range();
  d.validate();
  return d;
}

inline void write_csv_dataset(std::ostream& os, const Dataset& d) {
  for (std::size_t j = 0; j < d.dim; ++j) os << 'x' << j << ',';
  os << "label\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (double x : d.row(i)) os << detail::format_double(x) << ',';
    os << d.labels[i] << '\n';
  }
}

inline std::filesystem::path manifest_path(const std::filesystem::path& tensor_path) {
  auto p = tensor_path;
  p.replace_extension(".manifest.csv");
  return p;
}

// A 2-D tensor file plus its manifest (any CSV whose `label` column lists one
// label per tensor row, in order).
inline Dataset read_tensor_dataset(const std::filesystem::path& path) {
  const Tensor t = load_tensor(path);
  if (t.dims.size() != 2) throw FormatError(path.string() + ": expected a 2-D tensor");
  std::ifstream ms(manifest_path(path));
  if (!ms) throw ConfigError("missing manifest '" + manifest_path(path).string() + "'");
  std::string line;
  std::getline(ms, line);
  const auto header = detail::split_csv_line(line);
  std::size_t label_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "label") label_col = c;
  }
  if (label_col == header.size()) throw FormatError("manifest has no 'label' column");
  Dataset d;
  d.name = path.stem().string();
  d.dim = t.dims[1];
  d.features = t.values;
  while (std::getline(ms, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) throw FormatError("manifest: wrong number of columns");
    d.labels.push_back(detail::parse_index(cells[label_col], "manifest"));
  }
  if (d.labels.size() != t.dims[0]) throw FormatError("manifest row count does not match the tensor");
  for (auto y : d.labels) d.n_classes = std::max(d.n_classes, y + 1);
  d.fit_range();
  d.validate();
  return d;
}

// Dispatches on the extension: .csv or a tensor (+ manifest).
inline Dataset load_dataset(const std::filesystem::path& path) {
  if (path.extension() == ".csv") {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open '" + path.string() + "'");
    return read_csv_dataset(is, path.stem().string());
  }
  return read_tensor_dataset(path);
}

}  // namespace dppm::harness
