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
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dppm/errors.hpp"
#include "dppm/privacy/randomized_response.hpp"
#include "dppm/random.hpp"

namespace dppm::privacy {

using Mechanism = std::function<std::size_t(const Neighborhood&, const RRConfig&, Rng&)>;

inline std::size_t default_mechanism(const Neighborhood& n, const RRConfig& cfg, Rng& rng) {
  return rr_perturb(n, cfg, rng);
}

// Test fixture: always reports the true center whatever the budget says. Its
// privacy loss is unbounded, so the audit must reject it.
inline std::size_t broken_mechanism(const Neighborhood& n, const RRConfig&, Rng&) {
  return n.center_index;
}

// Randomized response run at twice the configured budget; a subtler fixture
// that is only detectable when e^ε is small relative to the trial count.
inline std::size_t overspent_mechanism(const Neighborhood& n, const RRConfig& cfg, Rng& rng) {
  return rr_perturb(n, RRConfig{2.0 * cfg.epsilon, cfg.k}, rng);
}

struct AuditResult {
  double epsilon = 0.0;
  std::size_t k = 0;
  std::size_t trials = 0;
  double max_ratio = 0.0;  // held-out estimate for the worst (output, i, j) triple
  double bound = 0.0;      // e^ε
  double log_se = 0.0;     // standard error of log(max_ratio)
  bool pass = false;
  std::size_t output = 0;
  std::size_t center_hi = 0;
  std::size_t center_lo = 0;

  // `epsilon=<ε> k=<k> trials=<n> max_ratio=<r> bound=<e^ε> pass=<bool>`
  std::string line() const {
    std::ostringstream os;
    os.precision(10);
    os << "epsilon=" << epsilon << " k=" << k << " trials=" << trials
       << " max_ratio=" << max_ratio << " bound=" << bound
       << " pass=" << (pass ? "true" : "false");
    return os.str();
  }
};

// Empirical check of the pure-DP ratio bound
//   P[o | center = i] <= e^ε · P[o | center = j]
// on a k-vector instance where every center shares the same candidate set.
//
// The first half of the per-center trials selects the worst (o, i, j) triple;
// the second half re-estimates that single ratio on fresh draws, so the test
// is not biased upward by taking a max over k^3 noisy estimates. Counts carry a
// +0.5 continuity correction (zero counts are expected for large ε), and the
// bound is tested on the log scale at three standard errors:
//   log r <= ε + 3 · se(log r).
inline AuditResult audit_ratio(const RRConfig& cfg, std::size_t trials, Rng& rng,
                               const Mechanism& mechanism = default_mechanism) {
  cfg.validate();
  require(trials >= 10000, "audit_ratio: need at least 1e4 trials");
  const std::size_t k = cfg.k;

  std::vector<std::vector<double>> candidates(k, std::vector<double>(4));
  for (auto& c : candidates) {
    for (auto& x : c) x = rng.normal();
  }
  NeighborhoodIndex index(candidates);
  std::vector<Neighborhood> hoods;
  for (std::size_t i = 0; i < k; ++i) hoods.push_back(index.neighborhood(i, k));

  auto tally = [&](std::size_t n) {
    std::vector<std::vector<double>> counts(k, std::vector<double>(k, 0.0));  // [center][output]
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t t = 0; t < n; ++t) counts[i][mechanism(hoods[i], cfg, rng)] += 1.0;
    }
    return counts;
  };

  const std::size_t n_select = trials / 2;
  const std::size_t n_test = trials - n_select;
  const auto sel = tally(n_select);

  AuditResult r;
  r.epsilon = cfg.epsilon;
  r.k = k;
  r.trials = trials;
  r.bound = std::exp(cfg.epsilon);
  double worst = -1.0;
  for (std::size_t o = 0; o < k; ++o) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (i == j) continue;
        const double ratio = (sel[i][o] + 0.5) / (sel[j][o] + 0.5);
        if (ratio > worst) {
          worst = ratio;
          r.output = o;
          r.center_hi = i;
          r.center_lo = j;
        }
      }
    }
  }

  const auto test = tally(n_test);
  const double a = test[r.center_hi][r.output] + 0.5;
  const double b = test[r.center_lo][r.output] + 0.5;
  const double n1 = static_cast<double>(n_test) + 1.0;
  r.max_ratio = a / b;
  r.log_se = std::sqrt(std::max(0.0, 1.0 / a - 1.0 / n1 + 1.0 / b - 1.0 / n1));
  r.pass = std::log(r.max_ratio) <= cfg.epsilon + 3.0 * r.log_se;
  return r;
}

}  // namespace dppm::privacy
