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

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dppm/errors.hpp"

namespace dppm::training {

enum class OptimizerKind { sgd, adam };

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd or adam)");
}

inline std::string to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
};

// Descent on the loss: θ ← θ - γ·step(∇L).
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, double learning_rate, std::size_t n_params)
      : cfg_(cfg), lr_(learning_rate), m_(n_params, 0.0), v_(n_params, 0.0) {
    require(learning_rate > 0.0, "optimizer: learning rate must be positive");
    if (cfg_.kind == OptimizerKind::adam) {
      require(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0 && cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0,
              "adam: betas must lie in [0, 1)");
      require(cfg_.eps_hat > 0.0, "adam: eps_hat must be positive");
    }
  }

  void step(std::span<double> params, std::span<const double> grad) {
    require_dims(params.size() == grad.size() && params.size() == m_.size(),
                 "optimizer: parameter/gradient size mismatch");
    ++t_;
    if (cfg_.kind == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
      return;
    }
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.eps_hat);
    }
  }

 private:
  OptimizerConfig cfg_;
  double lr_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

}  // namespace dppm::training
