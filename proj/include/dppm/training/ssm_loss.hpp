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

#include "dppm/diffkit.hpp"
#include "dppm/errors.hpp"
#include "dppm/privacy/randomized_response.hpp"
#include "dppm/random.hpp"
#include "dppm/scoremodel/mlp.hpp"

namespace dppm::training {

// A projection vector v, the mechanism's output v_r and the candidate set it
// was drawn from. This triple (with u) is everything the loss sees.
struct ProjectionTriple {
  std::vector<double> v;
  std::vector<double> v_r;
  privacy::Neighborhood neighborhood;
};

inline std::vector<std::vector<double>> sample_projections(std::size_t b, std::size_t dim,
                                                           Rng& rng) {
  require(b >= 1, "sample_projections: batch size must be positive");
  std::vector<std::vector<double>> v(b, std::vector<double>(dim));
  for (auto& row : v) {
    for (auto& x : row) x = rng.normal();
  }
  return v;
}

// Per-sample objective on the tape:
//   v_rᵀ J_s(u) v_r + ½ (vᵀ s(u))²
// where s is the network output and J_s its Jacobian in u. The perturbed
// vector enters only the Jacobian term, the raw v only the squared
// projection. J_s v_r comes from one forward-mode pass whose operations are
// themselves taped, so a single reverse sweep yields the parameter gradient.
inline diffkit::Var sample_loss(const scoremodel::MLPSpec& spec,
                                std::span<const diffkit::Var> params, std::span<const double> u,
                                std::span<const double> v, std::span<const double> v_r) {
  using diffkit::Dual;
  using diffkit::Var;
  const auto r = diffkit::jvp(
      [&](std::span<const Dual<double>> x) {
        return scoremodel::forward<Var, Dual<double>>(spec, params, x);
      },
      u, v_r);
  const Var hessian_term = diffkit::dot<double, Var>(v_r, r.directional);
  const Var projection = diffkit::dot<double, Var>(v, r.value);
  return hessian_term + 0.5 * (projection * projection);
}

inline double sample_loss_value(const scoremodel::Params& params, std::span<const double> u,
                                std::span<const double> v, std::span<const double> v_r) {
  const auto sj = scoremodel::score_jvp(params, u, v_r);
  const double hessian_term = diffkit::dot<double, double>(v_r, sj.jv);
  const double projection = diffkit::dot<double, double>(v, sj.s);
  return hessian_term + 0.5 * (projection * projection);
}

inline void check_batch(const scoremodel::Params& params,
                        const std::vector<std::vector<double>>& u_batch,
                        const std::vector<ProjectionTriple>& triples) {
  require_dims(u_batch.size() == triples.size(), "ssm_rr_loss: batch/triple count mismatch");
  require(!u_batch.empty(), "ssm_rr_loss: empty batch");
  const auto d = params.spec.input_dim;
  for (std::size_t i = 0; i < u_batch.size(); ++i) {
    require_dims(u_batch[i].size() == d && triples[i].v.size() == d && triples[i].v_r.size() == d,
                 "ssm_rr_loss: dimension mismatch at batch index " + std::to_string(i));
  }
}

// Batch mean of the per-sample objective (constant term dropped). With
// v_r = v for every triple this is the plain sliced score matching loss.
inline double ssm_rr_loss(const scoremodel::Params& params,
                          const std::vector<std::vector<double>>& u_batch,
                          const std::vector<ProjectionTriple>& triples) {
  check_batch(params, u_batch, triples);
  double total = 0.0;
  for (std::size_t i = 0; i < u_batch.size(); ++i) {
    double li = 0.0;
    try {
      li = sample_loss_value(params, u_batch[i], triples[i].v, triples[i].v_r);
    } catch (const NumericalError&) {
      li = std::nan("");
    }
    if (!std::isfinite(li)) {
      throw NumericalError("ssm_rr_loss: non-finite loss at batch index " + std::to_string(i));
    }
    total += li;
  }
  return total / static_cast<double>(u_batch.size());
}

// Loss and its parameter gradient. Per-sample gradients are accumulated in
// batch order so the result is bit-reproducible.
inline double ssm_rr_loss_and_grad(const scoremodel::Params& params,
                                   const std::vector<std::vector<double>>& u_batch,
                                   const std::vector<ProjectionTriple>& triples,
                                   diffkit::GradWorkspace& ws, std::vector<double>& grad) {
  check_batch(params, u_batch, triples);
  grad.assign(params.values.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(u_batch.size());
  const auto& spec = params.spec;
  const std::vector<double>* raw_v = nullptr;
  // x = u and the jvp direction is v_r; the unperturbed v is captured.
  auto loss = [&spec, &raw_v](std::span<const diffkit::Var> p, std::span<const double> u,
                              std::span<const double> v_r) {
    return sample_loss(spec, p, u, *raw_v, v_r);
  };
  double total = 0.0;
  for (std::size_t i = 0; i < u_batch.size(); ++i) {
    raw_v = &triples[i].v;
    try {
      total += diffkit::grad_through_jvp(loss, params.values, u_batch[i], triples[i].v_r, ws,
                                         grad, scale);
    } catch (const NumericalError& e) {
      throw NumericalError("ssm_rr_loss: non-finite loss at batch index " + std::to_string(i) +
                           " (" + e.what() + ")");
    }
  }
  return total / static_cast<double>(u_batch.size());
}

}  // namespace dppm::training
