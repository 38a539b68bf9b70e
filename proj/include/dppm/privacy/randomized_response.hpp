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
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dppm/errors.hpp"
#include "dppm/random.hpp"

namespace dppm::privacy {

// Randomized response over a k-element candidate set: keep the true element
// with probability e^ε/(e^ε+k-1), otherwise return one of the other k-1
// members uniformly. ε = +inf is accepted as the non-private limit.
struct RRConfig {
  double epsilon = 10.0;
  std::size_t k = 10;

  void validate() const {
    require(!std::isnan(epsilon) && epsilon >= 0.0, "RRConfig: epsilon must be >= 0");
    require(k >= 2, "RRConfig: k must be at least 2");
  }
};

// Probability of returning one particular alternative: 1/(e^ε+k-1).
inline double switch_probability(const RRConfig& cfg) {
  cfg.validate();
  const double km1 = static_cast<double>(cfg.k - 1);
  if (std::isinf(cfg.epsilon)) return 0.0;
  // Divide through by e^ε so large budgets do not overflow.
  const double e = std::exp(-cfg.epsilon);
  return e / (1.0 + km1 * e);
}

inline double keep_probability(const RRConfig& cfg) {
  cfg.validate();
  const double km1 = static_cast<double>(cfg.k - 1);
  if (std::isinf(cfg.epsilon)) return 1.0;
  return 1.0 / (1.0 + km1 * std::exp(-cfg.epsilon));
}

// The k batch members closest to the center in cosine distance, center first.
struct Neighborhood {
  std::size_t center_index = 0;
  std::vector<std::size_t> member_indices;
};

inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
  require_dims(a.size() == b.size(), "cosine_distance: length mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return 1.0 - ab / (std::sqrt(aa) * std::sqrt(bb));
}

// Precomputes unit directions so a whole batch of neighborhoods costs one
// b x b pass of inner products.
class NeighborhoodIndex {
 public:
  explicit NeighborhoodIndex(std::span<const std::vector<double>> batch) : batch_size_(batch.size()) {
    require(!batch.empty(), "topk_neighborhood: empty batch");
    dim_ = batch.front().size();
    unit_.resize(batch_size_ * dim_);
    for (std::size_t i = 0; i < batch_size_; ++i) {
      require_dims(batch[i].size() == dim_, "topk_neighborhood: ragged batch");
      double norm = 0.0;
      for (double x : batch[i]) norm += x * x;
      norm = std::sqrt(norm);
      if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw ConfigError("topk_neighborhood: vector " + std::to_string(i) +
                          " has zero or non-finite norm");
      }
      for (std::size_t d = 0; d < dim_; ++d) unit_[i * dim_ + d] = batch[i][d] / norm;
    }
  }

  std::size_t size() const { return batch_size_; }

  Neighborhood neighborhood(std::size_t center, std::size_t k) const {
    require(center < batch_size_, "topk_neighborhood: center index out of range");
    require(k >= 1 && batch_size_ >= k,
            "topk_neighborhood: batch size " + std::to_string(batch_size_) +
                " is smaller than k = " + std::to_string(k));
    std::vector<double> dist(batch_size_);
    const double* c = unit_.data() + center * dim_;
    for (std::size_t j = 0; j < batch_size_; ++j) {
      const double* o = unit_.data() + j * dim_;
      double cos = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) cos += c[d] * o[d];
      dist[j] = 1.0 - cos;
    }
    std::vector<std::size_t> others;
    others.reserve(batch_size_ - 1);
    for (std::size_t j = 0; j < batch_size_; ++j) {
      if (j != center) others.push_back(j);
    }
    auto closer = [&](std::size_t a, std::size_t b) {
      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    };
    std::partial_sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k - 1),
                      others.end(), closer);
    Neighborhood n{center, {center}};
    n.member_indices.insert(n.member_indices.end(), others.begin(),
                            others.begin() + static_cast<std::ptrdiff_t>(k - 1));
    return n;
  }

 private:
  std::size_t batch_size_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> unit_;
};

inline Neighborhood topk_neighborhood(std::size_t i, std::span<const std::vector<double>> batch,
                                      std::size_t k) {
  return NeighborhoodIndex(batch).neighborhood(i, k);
}

inline Neighborhood topk_neighborhood(std::size_t i, const std::vector<std::vector<double>>& batch,
                                      std::size_t k) {
  return topk_neighborhood(i, std::span<const std::vector<double>>(batch), k);
}

// Applies the mechanism to the neighborhood's center. Always consumes exactly
// two uniforms so streams stay aligned across runs that differ only in ε or k.
inline std::size_t rr_perturb(const Neighborhood& n, const RRConfig& cfg, Rng& rng) {
  require(n.member_indices.size() == cfg.k && !n.member_indices.empty() &&
              n.member_indices.front() == n.center_index,
          "rr_perturb: neighborhood does not match k or is not centered");
  const double keep = keep_probability(cfg);
  const double r = rng.uniform();
  const double pick = rng.uniform();
  if (r < keep) return n.center_index;
  const auto alt = std::min(cfg.k - 2, static_cast<std::size_t>(pick * static_cast<double>(cfg.k - 1)));
  return n.member_indices[1 + alt];
}

inline std::size_t rr_perturb(std::size_t i, const Neighborhood& n, const RRConfig& cfg, Rng& rng) {
  require(i == n.center_index, "rr_perturb: neighborhood is not centered on index " + std::to_string(i));
  return rr_perturb(n, cfg, rng);
}

}  // namespace dppm::privacy
