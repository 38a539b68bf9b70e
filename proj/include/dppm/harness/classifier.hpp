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

#include "dppm/dataset.hpp"
#include "dppm/errors.hpp"

namespace dppm::harness {

// Multinomial logistic regression on standardized features.
struct Classifier {
  std::size_t dim = 0;
  std::size_t n_classes = 0;
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<double> weights;  // n_classes x dim, row-major
  std::vector<double> bias;

  std::size_t predict(std::span<const double> x) const {
    require_dims(x.size() == dim, "Classifier: feature dimension mismatch");
    std::size_t best = 0;
    double best_logit = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      double z = bias[c];
      for (std::size_t j = 0; j < dim; ++j) z += weights[c * dim + j] * (x[j] - mean[j]) / scale[j];
      if (c == 0 || z > best_logit) {
        best_logit = z;
        best = c;
      }
    }
    return best;
  }
};

struct ClassifierConfig {
  std::size_t epochs = 200;
  double learning_rate = 0.5;
  double l2 = 1e-4;
};

// Full-batch gradient descent on the mean cross-entropy from zero weights, so
// the fit is a deterministic function of the data.
inline Classifier train_classifier(const Dataset& train, const ClassifierConfig& cfg = {}) {
  train.validate();
  require(cfg.epochs >= 1 && cfg.learning_rate > 0.0, "train_classifier: bad optimizer settings");
  std::size_t present = 0;
  for (auto c : train.class_counts()) present += c > 0 ? 1 : 0;
  require(present >= 2, "train_classifier: need at least two classes in the training data");

  const std::size_t n = train.size();
  const std::size_t d = train.dim;
  const std::size_t k = train.n_classes;
  Classifier clf{d, k, std::vector<double>(d, 0.0), std::vector<double>(d, 0.0),
                 std::vector<double>(k * d, 0.0), std::vector<double>(k, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) clf.mean[j] += train.row(i)[j];
  }
  for (auto& m : clf.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = train.row(i)[j] - clf.mean[j];
      clf.scale[j] += c * c;
    }
  }
  for (auto& s : clf.scale) s = std::max(std::sqrt(s / static_cast<double>(n)), 1e-8);

  std::vector<double> z(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) z[i * d + j] = (train.row(i)[j] - clf.mean[j]) / clf.scale[j];
  }

  std::vector<double> gw(k * d), gb(k), prob(k);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* zi = z.data() + i * d;
      double top = -INFINITY;
      for (std::size_t c = 0; c < k; ++c) {
        double logit = clf.bias[c];
        for (std::size_t j = 0; j < d; ++j) logit += clf.weights[c * d + j] * zi[j];
        prob[c] = logit;
        top = std::max(top, logit);
      }
      double norm = 0.0;
      for (auto& p : prob) norm += (p = std::exp(p - top));
      for (std::size_t c = 0; c < k; ++c) {
        const double err = prob[c] / norm - (train.labels[i] == c ? 1.0 : 0.0);
        gb[c] += err;
        for (std::size_t j = 0; j < d; ++j) gw[c * d + j] += err * zi[j];
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      clf.bias[c] -= cfg.learning_rate * gb[c] * inv_n;
      for (std::size_t j = 0; j < d; ++j) {
        auto& w = clf.weights[c * d + j];
        w -= cfg.learning_rate * (gw[c * d + j] * inv_n + cfg.l2 * w);
      }
    }
  }
  return clf;
}

template <class Predictor>
double accuracy(const Predictor& predict, const Dataset& test) {
  require(test.size() >= 1, "accuracy: empty test set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (predict(test.row(i)) == test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

inline double accuracy(const Classifier& clf, const Dataset& test) {
  require_dims(clf.dim == test.dim, "accuracy: classifier and test set dimensions differ");
  return accuracy([&clf](std::span<const double> x) { return clf.predict(x); }, test);
}

}  // namespace dppm::harness
