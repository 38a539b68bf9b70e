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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dppm/dataset.hpp"
#include "dppm/errors.hpp"
#include "dppm/random.hpp"

namespace dppm::harness {

enum class ToyKind { gauss2d, mixture2, rings, grid_digits };

struct ToySpec {
  ToyKind kind = ToyKind::mixture2;
  double sep = 6.0;  // mixture2 only

  std::size_t n_classes() const {
    switch (kind) {
      case ToyKind::gauss2d: return 1;
      case ToyKind::mixture2: return 2;
      case ToyKind::rings: return 2;
      case ToyKind::grid_digits: return 10;
    }
    return 0;
  }

  std::string name() const {
    switch (kind) {
      case ToyKind::gauss2d: return "gauss2d";
      case ToyKind::mixture2: {
        std::string s = std::to_string(sep);
        s.erase(s.find_last_not_of('0') + 1);
        if (s.back() == '.') s.pop_back();
        return "mixture2(" + s + ")";
      }
      case ToyKind::rings: return "rings";
      case ToyKind::grid_digits: return "grid_digits";
    }
    return "?";
  }
};

// Accepts gauss2d, mixture2, mixture2(<sep>), rings, grid_digits.
inline ToySpec parse_toy_spec(const std::string& s) {
  if (s == "gauss2d") return {ToyKind::gauss2d};
  if (s == "rings") return {ToyKind::rings};
  if (s == "grid_digits" || s == "grid_digits(8x8)") return {ToyKind::grid_digits};
  if (s == "mixture2") return {ToyKind::mixture2, 6.0};
  if (s.rfind("mixture2(", 0) == 0 && s.back() == ')') {
    const std::string arg = s.substr(9, s.size() - 10);
    std::size_t used = 0;
    double sep = 0.0;
    try {
      sep = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == arg.size() && !arg.empty() && sep > 0.0 && std::isfinite(sep),
            "mixture2: separation must be a positive number, got '" + arg + "'");
    return {ToyKind::mixture2, sep};
  }
  throw ConfigError("unknown dataset spec '" + s + "'");
}

namespace detail {

// 3x5 bitmaps, rows top to bottom, bit 2 = left column.
inline constexpr std::array<std::array<std::uint8_t, 5>, 10> kDigitFont = {{
    {7, 5, 5, 5, 7},
    {2, 6, 2, 2, 7},
    {7, 1, 7, 4, 7},
    {7, 1, 7, 1, 7},
    {5, 5, 7, 1, 1},
    {7, 4, 7, 1, 7},
    {7, 4, 7, 5, 7},
    {7, 1, 2, 2, 2},
    {7, 5, 7, 5, 7},
    {7, 5, 7, 1, 7},
}};

// Glyph stretched over columns 1..6 and all 8 rows, shifted by (dx, dy).
inline void draw_digit(std::size_t digit, int dx, int dy, std::span<double> px) {
  std::fill(px.begin(), px.end(), 0.0);
  for (int r = 0; r < 8; ++r) {
    for (int c = 1; c < 7; ++c) {
      const auto glyph_row = static_cast<std::size_t>(r * 5 / 8);
      const int glyph_col = (c - 1) / 2;
      if (!((kDigitFont[digit][glyph_row] >> (2 - glyph_col)) & 1)) continue;
      const int rr = r + dy;
      const int cc = c + dx;
      if (rr < 0 || rr >= 8 || cc < 0 || cc >= 8) continue;
      px[static_cast<std::size_t>(rr * 8 + cc)] = 1.0;
    }
  }
}

}  // namespace detail

// Deterministic toy datasets. Classes are balanced (round-robin labels).
//   gauss2d      N(0, I2), one class
//   mixture2     N(±(sep/2, 0), I2), two classes
//   rings        radii 1 and 3 with N(0, 0.15²) radial noise, two classes
//   grid_digits  8x8 glyphs with one-pixel jitter and pixel noise, in [0, 1]
inline Dataset gen_toy_dataset(const ToySpec& spec, std::size_t n, std::uint64_t seed) {
  const std::size_t classes = spec.n_classes();
  require(n >= 2 * classes, "gen_toy_dataset: need at least 2 samples per class");
  Rng rng(seed);
  Dataset d;
  d.name = spec.name();
  d.n_classes = classes;
  d.labels.resize(n);
  d.dim = spec.kind == ToyKind::grid_digits ? 64 : 2;
  d.features.resize(n * d.dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % classes;
    d.labels[i] = y;
    double* x = d.features.data() + i * d.dim;
    switch (spec.kind) {
      case ToyKind::gauss2d:
        x[0] = rng.normal();
        x[1] = rng.normal();
        break;
      case ToyKind::mixture2: {
        const double cx = (y == 0 ? -0.5 : 0.5) * spec.sep;
        x[0] = cx + rng.normal();
        x[1] = rng.normal();
        break;
      }
      case ToyKind::rings: {
        const double radius = (y == 0 ? 1.0 : 3.0) + 0.15 * rng.normal();
        const double angle = 2.0 * std::numbers::pi * rng.uniform();
        x[0] = radius * std::cos(angle);
        x[1] = radius * std::sin(angle);
        break;
      }
      case ToyKind::grid_digits: {
        const int dx = static_cast<int>(rng.index(3)) - 1;
        const int dy = static_cast<int>(rng.index(3)) - 1;
        std::span<double> px(x, 64);
        detail::draw_digit(y, dx, dy, px);
        for (auto& p : px) p = std::clamp(p + 0.1 * rng.normal(), 0.0, 1.0);
        break;
      }
    }
  }
  if (spec.kind == ToyKind::grid_digits) {
    d.lo = 0.0;
    d.hi = 1.0;
  } else {
    d.fit_range();
  }
  return d;
}

inline Dataset gen_toy_dataset(const std::string& spec, std::size_t n, std::uint64_t seed) {
  return gen_toy_dataset(parse_toy_spec(spec), n, seed);
}

// Seeded shuffle, then the first round(n * test_fraction) rows become the test split.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double test_fraction,
                                                 std::uint64_t seed) {
  d.validate();
  require(test_fraction > 0.0 && test_fraction < 1.0, "split_dataset: fraction must be in (0, 1)");
  std::vector<std::size_t> order(d.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(d.size())));
  require(n_test >= 1 && n_test < d.size(), "split_dataset: split leaves an empty side");
  auto take = [&](std::size_t from, std::size_t to, const std::string& suffix) {
    Dataset out;
    out.name = d.name + suffix;
    out.dim = d.dim;
    out.n_classes = d.n_classes;
    out.lo = d.lo;
    out.hi = d.hi;
    for (std::size_t k = from; k < to; ++k) {
      const auto r = d.row(order[k]);
      out.features.insert(out.features.end(), r.begin(), r.end());
      out.labels.push_back(d.labels[order[k]]);
    }
    return out;
  };
  return {take(n_test, d.size(), ":train"), take(0, n_test, ":test")};
}

}  // namespace dppm::harness
