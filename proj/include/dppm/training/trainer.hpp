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
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dppm/dataset.hpp"
#include "dppm/diffkit.hpp"
#include "dppm/errors.hpp"
#include "dppm/privacy/ledger.hpp"
#include "dppm/privacy/randomized_response.hpp"
#include "dppm/random.hpp"
#include "dppm/scoremodel/embedding.hpp"
#include "dppm/scoremodel/mlp.hpp"
#include "dppm/training/optimizer.hpp"
#include "dppm/training/ssm_loss.hpp"

namespace dppm::training {

// `none` trains plain sliced score matching (v_r = v) and is only meant as a
// non-private reference; its ledger reports ε = +inf.
enum class ProjectionMechanism { randomized_response, none };

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t iterations = 1000;
  double learning_rate = 1e-4;
  privacy::RRConfig rr;
  OptimizerConfig optimizer;
  ProjectionMechanism mechanism = ProjectionMechanism::randomized_response;
  std::uint64_t seed = 0;
  std::size_t checkpoint_interval = 0;  // 0 disables checkpoints
  // Std. dev. of Gaussian noise added to the embedded label entries of every
  // training example. Without it each class tail is a point mass, which has
  // no density and sends the loss to -inf.
  double embed_noise = 0.5;

  void validate() const {
    rr.validate();
    require(embed_noise >= 0.0 && std::isfinite(embed_noise),
            "TrainConfig: embed_noise must be >= 0");
    require(iterations >= 1, "TrainConfig: iterations must be at least 1");
    require(learning_rate > 0.0 && std::isfinite(learning_rate),
            "TrainConfig: learning rate must be positive");
    require(batch_size >= rr.k, "TrainConfig: batch size " + std::to_string(batch_size) +
                                    " must be at least k = " + std::to_string(rr.k));
  }
};

// What one iteration consumed. `params` are the values the loss was
// evaluated at (before the update).
struct TrainStep {
  std::size_t iteration = 0;
  const scoremodel::Params& params;
  const std::vector<std::vector<double>>& u_batch;
  const std::vector<ProjectionTriple>& triples;
  double loss = 0.0;
};

struct TrainHooks {
  std::function<void(const TrainStep&)> on_step;
  std::function<void(std::size_t iteration, const scoremodel::Params&)> on_checkpoint;
};

struct TrainResult {
  scoremodel::Params params;
  privacy::PrivacyLedger ledger;
  std::vector<double> loss_trace;
};

// Mini-batch training on RR-perturbed projection triples:
//   draw a batch with replacement -> embed labels -> draw Gaussian projections
//   -> per-vector top-k neighborhood and randomized response -> loss and
//   gradient -> optimizer step.
// Data, projection and mechanism randomness use separate streams of cfg.seed.
// With E == nullptr labels are ignored and u = x.
inline TrainResult train(const Dataset& data, const scoremodel::EmbeddingMatrix* E,
                         const scoremodel::MLPSpec& spec, const TrainConfig& cfg,
                         const TrainHooks& hooks = {}) {
  cfg.validate();
  data.validate();
  spec.validate();
  const std::size_t embed_dim = E ? E->embed_dim() : 0;
  if (E) require(data.n_classes <= E->n_classes(), "train: dataset has more classes than the embedding");
  require(spec.input_dim == data.dim + embed_dim,
          "train: model input_dim must equal feature dim + embed dim");

  const Rng root(cfg.seed);
  Rng data_rng = root.child(1);
  Rng proj_rng = root.child(2);
  Rng mech_rng = root.child(3);
  Rng noise_rng = root.child(4);

  const bool randomize = cfg.mechanism == ProjectionMechanism::randomized_response;
  TrainResult result{scoremodel::init_params(spec),
                     privacy::PrivacyLedger(randomize ? cfg.rr.epsilon
                                                      : std::numeric_limits<double>::infinity()),
                     {}};
  result.loss_trace.reserve(cfg.iterations);
  Optimizer opt(cfg.optimizer, cfg.learning_rate, result.params.values.size());

  const std::size_t b = cfg.batch_size;
  const std::size_t dim = spec.input_dim;
  std::vector<std::vector<double>> u_batch(b);
  std::vector<ProjectionTriple> triples(b);
  std::vector<double> grad;
  diffkit::GradWorkspace ws;

  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t idx = data_rng.index(data.size());
      const auto x = data.row(idx);
      if (E) {
        u_batch[i] = scoremodel::embed(x, data.labels[idx], *E).u;
        if (cfg.embed_noise > 0.0) {
          for (std::size_t j = data.dim; j < dim; ++j) u_batch[i][j] += cfg.embed_noise * noise_rng.normal();
        }
      } else {
        u_batch[i].assign(x.begin(), x.end());
      }
    }
    const auto v = sample_projections(b, dim, proj_rng);
    if (randomize) {
      const privacy::NeighborhoodIndex index(v);
      for (std::size_t i = 0; i < b; ++i) {
        auto hood = index.neighborhood(i, cfg.rr.k);
        const std::size_t chosen = privacy::rr_perturb(hood, cfg.rr, mech_rng);
        triples[i] = {v[i], v[chosen], std::move(hood)};
      }
      result.ledger.record_invocations(b);
    } else {
      for (std::size_t i = 0; i < b; ++i) triples[i] = {v[i], v[i], {i, {i}}};
    }

    double loss = 0.0;
    try {
      loss = ssm_rr_loss_and_grad(result.params, u_batch, triples, ws, grad);
    } catch (const NumericalError& e) {
      throw TrainingDivergence(t, e.what());
    }
    result.loss_trace.push_back(loss);
    if (hooks.on_step) hooks.on_step(TrainStep{t, result.params, u_batch, triples, loss});

    opt.step(result.params.values, grad);
    for (double p : result.params.values) {
      if (!std::isfinite(p)) throw TrainingDivergence(t, "non-finite parameter after update");
    }
    if (cfg.checkpoint_interval > 0 && t % cfg.checkpoint_interval == 0 && hooks.on_checkpoint) {
      hooks.on_checkpoint(t, result.params);
    }
  }
  return result;
}

inline TrainResult train(const Dataset& data, const scoremodel::EmbeddingMatrix& E,
                         const scoremodel::MLPSpec& spec, const TrainConfig& cfg,
                         const TrainHooks& hooks = {}) {
  return train(data, &E, spec, cfg, hooks);
}

}  // namespace dppm::training
