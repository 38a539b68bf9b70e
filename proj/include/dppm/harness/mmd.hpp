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
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dppm/errors.hpp"

namespace dppm::harness {

// Row-major n x dim sample view.
struct Sample {
  std::span<const double> values;
  std::size_t dim = 0;

  std::size_t size() const { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const double> row(std::size_t i) const { return values.subspan(i * dim, dim); }
};

namespace detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

}  // namespace detail

// Median pairwise squared distance over the pooled sample, from at most
// `max_points` evenly strided points per side. Returns h with h² = median/2.
inline double median_bandwidth(const Sample& a, const Sample& b, std::size_t max_points = 500) {
  std::vector<std::span<const double>> pts;
  for (const Sample* s : {&a, &b}) {
    const std::size_t n = s->size();
    const std::size_t stride = std::max<std::size_t>(1, n / max_points);
    for (std::size_t i = 0; i < n; i += stride) pts.push_back(s->row(i));
  }
  std::vector<double> d2;
  d2.reserve(pts.size() * (pts.size() - 1) / 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) d2.push_back(detail::sq_dist(pts[i], pts[j]));
  }
  if (d2.empty()) return 1.0;
  auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
  std::nth_element(d2.begin(), mid, d2.end());
  return *mid > 0.0 ? std::sqrt(*mid / 2.0) : 1.0;
}

enum class MmdEstimator { unbiased, biased };

// Squared MMD with k(x, y) = exp(-‖x - y‖² / (2h²)). Without an explicit
// bandwidth the pooled median heuristic is used. The unbiased estimator drops
// the diagonal of the within-sample sums and can dip slightly below zero.
inline double mmd2_rbf(const Sample& a, const Sample& b, std::optional<double> bandwidth = {},
                       MmdEstimator estimator = MmdEstimator::unbiased) {
  require_dims(a.dim == b.dim && a.dim >= 1, "mmd2_rbf: samples have different dimensions");
  require_dims(a.values.size() % a.dim == 0 && b.values.size() % b.dim == 0,
               "mmd2_rbf: sample length is not a multiple of dim");
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  require(m >= 1 && n >= 1, "mmd2_rbf: empty sample");
  const bool unbiased = estimator == MmdEstimator::unbiased;
  require(!unbiased || (m >= 2 && n >= 2), "mmd2_rbf: unbiased estimate needs two points per side");
  const double h = bandwidth ? *bandwidth : median_bandwidth(a, b);
  require(h > 0.0 && std::isfinite(h), "mmd2_rbf: bandwidth must be positive");
  const double gamma = 1.0 / (2.0 * h * h);
  auto k = [gamma](std::span<const double> x, std::span<const double> y) {
    return std::exp(-gamma * detail::sq_dist(x, y));
  };

  auto within = [&](const Sample& s) {
    const std::size_t cnt = s.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < cnt; ++i) {
      for (std::size_t j = i + 1; j < cnt; ++j) sum += k(s.row(i), s.row(j));
    }
    sum *= 2.0;
    const double c = static_cast<double>(cnt);
    return unbiased ? sum / (c * (c - 1.0)) : (sum + c) / (c * c);
  };
  double cross = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) cross += k(a.row(i), b.row(j));
  }
  cross /= static_cast<double>(m) * static_cast<double>(n);
  return within(a) + within(b) - 2.0 * cross;
}

inline double mmd2_rbf(std::span<const double> a, std::span<const double> b, std::size_t dim,
                       std::optional<double> bandwidth = {},
                       MmdEstimator estimator = MmdEstimator::unbiased) {
  return mmd2_rbf(Sample{a, dim}, Sample{b, dim}, bandwidth, estimator);
}

}  // namespace dppm::harness
