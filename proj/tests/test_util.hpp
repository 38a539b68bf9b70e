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
#include <vector>

#include "dppm/random.hpp"
#include "dppm/scoremodel/mlp.hpp"

namespace dppm::testing {

// Central differences of a scalar function of a vector.
template <class F>
std::vector<double> central_diff(F&& f, std::span<const double> x, double h = 1e-5) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(std::span<const double>(probe));
    probe[i] = x[i] - h;
    const double down = f(std::span<const double>(probe));
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ‖a - b‖∞ / ‖b‖∞ (absolute when b vanishes).
inline double max_rel_err(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

// Random small network: input 1..4, up to two hidden layers of 1..16 units.
inline scoremodel::MLPSpec random_spec(Rng& rng, std::size_t max_dim = 4) {
  scoremodel::MLPSpec spec;
  spec.input_dim = 1 + rng.index(max_dim);
  spec.output_dim = spec.input_dim;
  const std::size_t hidden = rng.index(3);
  for (std::size_t i = 0; i < hidden; ++i) spec.hidden_dims.push_back(1 + rng.index(16));
  spec.activation = rng.index(2) == 0 ? scoremodel::Activation::tanh : scoremodel::Activation::softplus;
  spec.seed = rng.engine()();
  return spec;
}

inline std::vector<double> normal_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace dppm::testing
