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
#include <span>
#include <string>
#include <vector>

#include "dppm/errors.hpp"

namespace dppm {

// Labeled feature matrix, n x dim row-major.
struct Dataset {
  std::string name;
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<std::size_t> labels;
  std::size_t n_classes = 0;
  double lo = 0.0;  // value range; every feature lies in [lo, hi]
  double hi = 0.0;

  std::size_t size() const { return labels.size(); }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features).subspan(i * dim, dim);
  }

  void validate() const {
    require(size() >= 1, "dataset '" + name + "' is empty");
    require(dim >= 1 && features.size() == size() * dim,
            "dataset '" + name + "': feature matrix shape mismatch");
    require(n_classes >= 1, "dataset '" + name + "': no classes");
    for (auto y : labels) {
      require(y < n_classes, "dataset '" + name + "': label out of range");
    }
    for (double x : features) {
      if (!std::isfinite(x)) throw ConfigError("dataset '" + name + "': non-finite feature");
      require(x >= lo && x <= hi, "dataset '" + name + "': feature outside value range");
    }
  }

  // Sets [lo, hi] to the observed feature range.
  void fit_range() {
    if (features.empty()) return;
    lo = hi = features.front();
    for (double x : features) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> c(n_classes, 0);
    for (auto y : labels) ++c[y];
    return c;
  }
};

}  // namespace dppm
