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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dppm/errors.hpp"
#include "dppm/random.hpp"

namespace dppm::sampler {

enum class KineticKind { gaussian, rayleigh, uniform };

// Initial momentum distribution. The dynamics always use ∇_p G(p) = p; the
// distribution only sets how much energy each refresh injects. Defaults give
// every kind the same mean kinetic energy as N(0, I).
struct KineticSpec {
  KineticKind kind = KineticKind::gaussian;
  double sigma = 0.0;  // rayleigh scale of |p|; 0 means sqrt(dim / 2)
  double lo = -std::sqrt(3.0);  // uniform support, per coordinate
  double hi = std::sqrt(3.0);

  void validate() const {
    if (kind == KineticKind::rayleigh) require(sigma >= 0.0 && std::isfinite(sigma), "rayleigh kinetic: sigma must be >= 0");
    if (kind == KineticKind::uniform) require(lo <= hi, "uniform kinetic: need lo <= hi");
  }

  double rayleigh_scale(std::size_t dim) const {
    return sigma > 0.0 ? sigma : std::sqrt(static_cast<double>(dim) / 2.0);
  }
};

inline KineticKind parse_kinetic(const std::string& s) {
  if (s == "gaussian") return KineticKind::gaussian;
  if (s == "rayleigh") return KineticKind::rayleigh;
  if (s == "uniform") return KineticKind::uniform;
  throw ConfigError("unknown kinetic distribution '" + s + "'");
}

inline std::string to_string(KineticKind k) {
  switch (k) {
    case KineticKind::gaussian: return "gaussian";
    case KineticKind::rayleigh: return "rayleigh";
    case KineticKind::uniform: return "uniform";
  }
  return "?";
}

struct HamiltonianState {
  std::vector<double> u;
  std::vector<double> p;
  std::size_t m = 0;
};

inline std::vector<double> refresh_momentum(std::size_t dim, const KineticSpec& kinetic, Rng& rng) {
  require(dim >= 1, "refresh_momentum: dim must be positive");
  kinetic.validate();
  std::vector<double> p(dim);
  switch (kinetic.kind) {
    case KineticKind::gaussian:
      for (auto& x : p) x = rng.normal();
      break;
    case KineticKind::uniform:
      for (auto& x : p) x = rng.uniform(kinetic.lo, kinetic.hi);
      break;
    case KineticKind::rayleigh: {
      // Isotropic: uniform direction, Rayleigh(sigma) length.
      double norm = 0.0;
      while (norm == 0.0) {
        norm = 0.0;
        for (auto& x : p) {
          x = rng.normal();
          norm += x * x;
        }
        norm = std::sqrt(norm);
      }
      const double length = kinetic.rayleigh_scale(dim) * std::sqrt(-2.0 * std::log1p(-rng.uniform()));
      for (auto& x : p) x *= length / norm;
      break;
    }
  }
  return p;
}

namespace detail {

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// N leapfrog steps. `force` holds score(s.u) on entry and on exit, so
// consecutive steps evaluate the score once each. `step_offset` only labels
// divergence errors.
template <class Score>
void integrate(HamiltonianState& s, Score&& score, double lambda, std::size_t steps,
               std::vector<double>& force, std::size_t step_offset = 0) {
  const double half = 0.5 * lambda;
  const std::size_t d = s.u.size();
  for (std::size_t n = 1; n <= steps; ++n) {
    if (force.size() != d) throw DimensionError("score returned a vector of the wrong length");
    for (std::size_t i = 0; i < d; ++i) s.p[i] = s.p[i] + half * force[i];
    for (std::size_t i = 0; i < d; ++i) s.u[i] = s.u[i] + lambda * s.p[i];
    try {
      force = score(std::span<const double>(s.u));
    } catch (const NumericalError&) {
      throw SamplerDivergence(s.m, step_offset + n);
    }
    if (force.size() != d) throw DimensionError("score returned a vector of the wrong length");
    for (std::size_t i = 0; i < d; ++i) s.p[i] = s.p[i] + half * force[i];
    if (!all_finite(s.u) || !all_finite(s.p) || !all_finite(force)) {
      throw SamplerDivergence(s.m, step_offset + n);
    }
  }
}

}  // namespace detail

// One leapfrog step toward high density of exp(-(Q(u) + pᵀp/2)) with
// score(u) = -∇Q(u):
//   p ← p + (λ/2)·score(u);  u ← u + λ·p;  p ← p + (λ/2)·score(u).
template <class Score>
HamiltonianState leapfrog(const HamiltonianState& state, Score&& score, double lambda) {
  require(lambda > 0.0, "leapfrog: step size must be positive");
  require_dims(state.u.size() == state.p.size(), "leapfrog: position/momentum size mismatch");
  HamiltonianState next = state;
  std::vector<double> force;
  try {
    force = score(std::span<const double>(state.u));
  } catch (const NumericalError&) {
    throw SamplerDivergence(state.m, 0);
  }
  detail::integrate(next, score, lambda, 1, force);
  return next;
}

// Potential difference Q(u_new) - Q(u_old) = -∫ score · du along the straight
// segment, midpoint rule with `steps` panels. Lets the Metropolis test run
// when only the score is known.
template <class Score>
double estimate_delta_potential_path(Score&& score, std::span<const double> u_old,
                                     std::span<const double> u_new, std::size_t steps) {
  require(steps >= 1, "estimate_delta_potential_path: steps must be >= 1");
  require_dims(u_old.size() == u_new.size(), "estimate_delta_potential_path: size mismatch");
  const std::size_t d = u_old.size();
  std::vector<double> delta(d), point(d);
  for (std::size_t i = 0; i < d; ++i) delta[i] = u_new[i] - u_old[i];
  double integral = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = (static_cast<double>(k) + 0.5) / static_cast<double>(steps);
    for (std::size_t i = 0; i < d; ++i) point[i] = u_old[i] + t * delta[i];
    const auto s = score(std::span<const double>(point));
    double proj = 0.0;
    for (std::size_t i = 0; i < d; ++i) proj += s[i] * delta[i];
    integral += proj;
  }
  return -integral / static_cast<double>(steps);
}

inline double kinetic_energy(std::span<const double> p) {
  double e = 0.0;
  for (double x : p) e += x * x;
  return 0.5 * e;
}

enum class MetropolisMode { off, exact_energy, path_integral };

inline MetropolisMode parse_metropolis(const std::string& s) {
  if (s == "off") return MetropolisMode::off;
  if (s == "exact_energy") return MetropolisMode::exact_energy;
  if (s == "path_integral") return MetropolisMode::path_integral;
  throw ConfigError("unknown metropolis mode '" + s + "'");
}

inline std::string to_string(MetropolisMode m) {
  switch (m) {
    case MetropolisMode::off: return "off";
    case MetropolisMode::exact_energy: return "exact_energy";
    case MetropolisMode::path_integral: return "path_integral";
  }
  return "?";
}

struct AcceptStats {
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t estimator_failures = 0;
};

// Accepts with probability min(1, exp(-ΔH)), ΔH = H(new) - H(old) as supplied
// by `delta_h(old, new)` (returning std::optional<double>). An estimator that
// returns nothing, throws, or yields a non-finite value counts as a failure
// and the move is rejected. Mode `off` accepts without drawing.
template <class Estimator>
bool metropolis_accept(const HamiltonianState& old_state, const HamiltonianState& new_state,
                       Estimator&& delta_h, Rng& rng, MetropolisMode mode = MetropolisMode::exact_energy,
                       AcceptStats* stats = nullptr) {
  if (mode == MetropolisMode::off) {
    if (stats) ++stats->proposals, ++stats->accepted;
    return true;
  }
  const double r = rng.uniform();
  std::optional<double> dh;
  try {
    dh = delta_h(old_state, new_state);
  } catch (const Error&) {
    dh.reset();
  }
  if (stats) ++stats->proposals;
  if (!dh || std::isnan(*dh)) {
    if (stats) ++stats->estimator_failures;
    return false;
  }
  const bool accept = *dh <= 0.0 || r < std::exp(-*dh);
  if (accept && stats) ++stats->accepted;
  return accept;
}

}  // namespace dppm::sampler
