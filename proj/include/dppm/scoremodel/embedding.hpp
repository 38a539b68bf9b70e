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
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dppm/errors.hpp"
#include "dppm/random.hpp"

namespace dppm::scoremodel {

// Fixed (never trained) label embedding: one row per class.
//
// Rows are required to be pairwise distinct and self-consistent under
// max-inner-product decoding, i.e. row y scores highest against itself.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  EmbeddingMatrix(std::size_t n_classes, std::size_t embed_dim, std::vector<double> values,
                  std::uint64_t seed = 0)
      : n_classes_(n_classes), embed_dim_(embed_dim), values_(std::move(values)), seed_(seed) {
    require(n_classes_ >= 1 && embed_dim_ >= 1, "EmbeddingMatrix: empty shape");
    require(values_.size() == n_classes_ * embed_dim_, "EmbeddingMatrix: value count mismatch");
    for (std::size_t i = 0; i < n_classes_; ++i) {
      for (std::size_t j = 0; j < n_classes_; ++j) {
        if (i == j) continue;
        require(!same_row(i, j), "EmbeddingMatrix: rows " + std::to_string(i) + " and " +
                                     std::to_string(j) + " coincide");
        require(inner(row(i), i) > inner(row(i), j),
                "EmbeddingMatrix: row " + std::to_string(i) + " does not decode to itself");
      }
    }
  }

  // Seeded Gaussian rows rescaled to norm sqrt(embed_dim): entries have unit
  // RMS like standardized features, and equal row norms make max-inner-product
  // decoding coincide with nearest-row decoding.
  static EmbeddingMatrix random(std::size_t n_classes, std::size_t embed_dim, std::uint64_t seed) {
    require(n_classes >= 1 && embed_dim >= 1, "EmbeddingMatrix: empty shape");
    Rng rng(seed);
    std::vector<double> values(n_classes * embed_dim);
    const double target = std::sqrt(static_cast<double>(embed_dim));
    for (std::size_t i = 0; i < n_classes; ++i) {
      double norm = 0.0;
      while (norm < 1e-8) {
        norm = 0.0;
        for (std::size_t k = 0; k < embed_dim; ++k) {
          values[i * embed_dim + k] = rng.normal();
          norm += values[i * embed_dim + k] * values[i * embed_dim + k];
        }
        norm = std::sqrt(norm);
      }
      for (std::size_t k = 0; k < embed_dim; ++k) values[i * embed_dim + k] *= target / norm;
    }
    return EmbeddingMatrix(n_classes, embed_dim, std::move(values), seed);
  }

  static EmbeddingMatrix identity(std::size_t n) {
    std::vector<double> values(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) values[i * n + i] = 1.0;
    return EmbeddingMatrix(n, n, std::move(values));
  }

  std::size_t n_classes() const { return n_classes_; }
  std::size_t embed_dim() const { return embed_dim_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<double>& values() const { return values_; }

  std::span<const double> row(std::size_t y) const {
    return std::span<const double>(values_).subspan(y * embed_dim_, embed_dim_);
  }

  // Inner product of `tail` with row y.
  double inner(std::span<const double> tail, std::size_t y) const {
    const auto r = row(y);
    double acc = 0.0;
    for (std::size_t k = 0; k < embed_dim_; ++k) acc += tail[k] * r[k];
    return acc;
  }

  // Smallest Euclidean distance between two distinct rows.
  double min_row_gap() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_classes_; ++i) {
      for (std::size_t j = i + 1; j < n_classes_; ++j) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < embed_dim_; ++k) {
          const double d = row(i)[k] - row(j)[k];
          d2 += d * d;
        }
        best = std::min(best, std::sqrt(d2));
      }
    }
    return best;
  }

 private:
  bool same_row(std::size_t i, std::size_t j) const {
    for (std::size_t k = 0; k < embed_dim_; ++k) {
      if (row(i)[k] != row(j)[k]) return false;
    }
    return true;
  }

  std::size_t n_classes_ = 0;
  std::size_t embed_dim_ = 0;
  std::vector<double> values_;
  std::uint64_t seed_ = 0;
};

// u = concat(x, one_hot(y) E).
struct EmbeddedSample {
  std::vector<double> u;
  std::size_t feature_dim = 0;
  std::size_t embed_dim = 0;
};

inline EmbeddedSample embed(std::span<const double> x, std::size_t y, const EmbeddingMatrix& E) {
  require(y < E.n_classes(), "embed: label " + std::to_string(y) + " out of range");
  EmbeddedSample s{std::vector<double>(x.begin(), x.end()), x.size(), E.embed_dim()};
  const auto r = E.row(y);
  s.u.insert(s.u.end(), r.begin(), r.end());
  return s;
}

struct Unembedded {
  std::vector<double> x;
  std::size_t y = 0;
};

// Features are the leading entries; the label is the row with the largest
// inner product against the trailing embed_dim entries (ties -> smallest index).
inline Unembedded unembed(std::span<const double> u, const EmbeddingMatrix& E) {
  require_dims(u.size() >= E.embed_dim(), "unembed: sample shorter than the embedding");
  const std::size_t feature_dim = u.size() - E.embed_dim();
  const auto tail = u.subspan(feature_dim);
  std::size_t best = 0;
  double best_score = E.inner(tail, 0);
  for (std::size_t y = 1; y < E.n_classes(); ++y) {
    const double s = E.inner(tail, y);
    if (s > best_score) {
      best_score = s;
      best = y;
    }
  }
  return {std::vector<double>(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(feature_dim)),
          best};
}

inline Unembedded unembed(const EmbeddedSample& s, const EmbeddingMatrix& E) {
  require_dims(s.u.size() == s.feature_dim + s.embed_dim && s.embed_dim == E.embed_dim(),
               "unembed: sample layout does not match the embedding");
  return unembed(std::span<const double>(s.u), E);
}

}  // namespace dppm::scoremodel
