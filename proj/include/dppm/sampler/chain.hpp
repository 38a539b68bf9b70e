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
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "dppm/errors.hpp"
#include "dppm/random.hpp"
#include "dppm/sampler/hamiltonian.hpp"
#include "dppm/scoremodel/embedding.hpp"
#include "dppm/scoremodel/mlp.hpp"

namespace dppm::sampler {

struct SamplerConfig {
  double lambda0 = 1e-2;  // step size at the last outer iteration
  std::size_t M = 10;     // outer iterations (momentum refreshes)
  std::size_t N = 100;    // leapfrog steps per outer iteration
  KineticSpec kinetic;
  MetropolisMode metropolis = MetropolisMode::off;
  std::size_t path_steps = 64;  // panels for the path-integral energy estimate
  double init_lo = -1.0;        // u(0) ~ U(init_lo, init_hi) per coordinate
  double init_hi = 1.0;
  // Caps (M/m)^2 in the step-size schedule; 0 leaves it unclamped.
  double max_multiplier = 0.0;
  std::size_t thin = 0;  // record u every `thin` outer iterations; 0 records nothing
  std::uint64_t seed = 0;

  void validate() const {
    require(lambda0 > 0.0 && std::isfinite(lambda0), "SamplerConfig: lambda0 must be positive");
    require(M >= 1, "SamplerConfig: M must be at least 1");
    require(N >= 1, "SamplerConfig: N must be at least 1");
    require(path_steps >= 1, "SamplerConfig: path_steps must be at least 1");
    require(init_lo < init_hi, "SamplerConfig: init range is empty");
    require(max_multiplier >= 0.0, "SamplerConfig: max_multiplier must be >= 0");
    kinetic.validate();
  }
};

// λ = λ₀·(M/m)², 1-indexed m; optionally clamped to λ₀·max_multiplier.
inline double step_size(std::size_t m, const SamplerConfig& cfg) {
  require(m >= 1 && m <= cfg.M, "step_size: outer index must lie in [1, M]");
  const double ratio = static_cast<double>(cfg.M) / static_cast<double>(m);
  double mult = ratio * ratio;
  if (cfg.max_multiplier > 0.0) mult = std::min(mult, cfg.max_multiplier);
  return cfg.lambda0 * mult;
}

using PotentialFn = std::function<double(std::span<const double>)>;

struct ChainResult {
  std::vector<double> u;
  std::vector<std::vector<double>> trajectory;
  AcceptStats stats;
};

// Hamiltonian MCMC with a momentum refresh at every outer iteration:
//   u(0) uniform on the init box; for m = 1..M: refresh p, set λ by the
//   schedule, run N leapfrog steps, then (optionally) a Metropolis test on the
//   joint (u, p) against the post-refresh state.
// `potential` is required for MetropolisMode::exact_energy.
template <class Score>
ChainResult run_chain(Score&& score, std::size_t dim, const SamplerConfig& cfg, Rng& rng,
                      const PotentialFn& potential = {}) {
  cfg.validate();
  require(dim >= 1, "run_chain: dim must be positive");
  require(cfg.metropolis != MetropolisMode::exact_energy || static_cast<bool>(potential),
          "run_chain: exact_energy Metropolis needs a potential function");

  ChainResult out;
  HamiltonianState s;
  s.u.resize(dim);
  for (auto& x : s.u) x = rng.uniform(cfg.init_lo, cfg.init_hi);

  auto delta_h = [&](const HamiltonianState& a, const HamiltonianState& b) -> std::optional<double> {
    double dq = 0.0;
    if (cfg.metropolis == MetropolisMode::exact_energy) {
      dq = potential(b.u) - potential(a.u);
    } else {
      dq = estimate_delta_potential_path(score, a.u, b.u, cfg.path_steps);
    }
    const double dh = dq + kinetic_energy(b.p) - kinetic_energy(a.p);
    if (!std::isfinite(dh)) return std::nullopt;
    return dh;
  };

  std::vector<double> force;
  for (std::size_t m = 1; m <= cfg.M; ++m) {
    s.m = m;
    s.p = refresh_momentum(dim, cfg.kinetic, rng);
    const double lambda = step_size(m, cfg);
    const HamiltonianState start = s;
    try {
      force = score(std::span<const double>(s.u));
    } catch (const NumericalError&) {
      throw SamplerDivergence(m, 0);
    }
    detail::integrate(s, score, lambda, cfg.N, force);
    if (!metropolis_accept(start, s, delta_h, rng, cfg.metropolis, &out.stats)) {
      s.u = start.u;
    }
    if (cfg.thin > 0 && m % cfg.thin == 0) out.trajectory.push_back(s.u);
  }
  out.u = std::move(s.u);
  return out;
}

// Chains are independent: chain c draws from Rng(cfg.seed).child(c) and
// results come back in chain order regardless of scheduling.
template <class Score>
std::vector<ChainResult> run_chains(Score&& score, std::size_t dim, std::size_t n_chains,
                                    const SamplerConfig& cfg, const PotentialFn& potential = {},
                                    unsigned workers = 0) {
  cfg.validate();
  std::vector<ChainResult> results(n_chains);
  std::vector<std::exception_ptr> errors(n_chains);
  const Rng root(cfg.seed);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t c = next++; c < n_chains; c = next++) {
      try {
        Rng rng = root.child(c);
        results[c] = run_chain(score, dim, cfg, rng, potential);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n_chains, 1)));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

// Score of a trained network, usable wherever a Score callable is expected.
struct NetworkScore {
  const scoremodel::Params* params;

  std::vector<double> operator()(std::span<const double> u) const {
    return scoremodel::score(*params, u);
  }
};

inline scoremodel::EmbeddedSample run_chain(const scoremodel::Params& params,
                                            const scoremodel::EmbeddingMatrix& E,
                                            const SamplerConfig& cfg, std::size_t dim, Rng& rng) {
  require_dims(dim == params.spec.input_dim && dim > E.embed_dim(),
               "run_chain: dim does not match the model and embedding");
  auto r = run_chain(NetworkScore{&params}, dim, cfg, rng);
  return {std::move(r.u), dim - E.embed_dim(), E.embed_dim()};
}

}  // namespace dppm::sampler
