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
#include <span>
#include <string>
#include <vector>

#include "dppm/diffkit.hpp"
#include "dppm/errors.hpp"
#include "dppm/random.hpp"

namespace dppm::scoremodel {

// Smooth activations only: the sliced score matching loss differentiates the
// network's Jacobian, and piecewise-linear units have a zero second derivative
// almost everywhere.
enum class Activation : std::uint32_t { tanh = 0, softplus = 1 };

inline std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "softplus"; }

inline Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "softplus") return Activation::softplus;
  throw ConfigError("unknown activation '" + s + "' (expected tanh or softplus)");
}

struct MLPSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  Activation activation = Activation::tanh;
  std::size_t output_dim = 0;
  std::uint64_t seed = 0;

  void validate() const {
    require(input_dim > 0, "MLPSpec: input_dim must be positive");
    require(output_dim == input_dim, "MLPSpec: output_dim must equal input_dim");
    for (auto h : hidden_dims) require(h > 0, "MLPSpec: hidden widths must be positive");
  }

  bool operator==(const MLPSpec&) const = default;
};

struct LayerShape {
  std::size_t rows = 0;  // fan-out
  std::size_t cols = 0;  // fan-in
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

inline std::vector<LayerShape> layer_layout(const MLPSpec& spec) {
  std::vector<LayerShape> layers;
  std::size_t fan_in = spec.input_dim;
  std::size_t offset = 0;
  auto add = [&](std::size_t fan_out) {
    LayerShape l{fan_out, fan_in, offset, offset + fan_out * fan_in};
    offset = l.bias_offset + fan_out;
    layers.push_back(l);
    fan_in = fan_out;
  };
  for (auto h : spec.hidden_dims) add(h);
  add(spec.output_dim);
  return layers;
}

inline std::size_t parameter_count(const MLPSpec& spec) {
  const auto layers = layer_layout(spec);
  return layers.back().bias_offset + layers.back().rows;
}

// Network parameters θ: all weights and biases in one flat vector, laid out
// layer by layer (row-major weights, then bias).
struct Params {
  MLPSpec spec;
  std::vector<double> values;

  std::vector<LayerShape> layers() const { return layer_layout(spec); }

  std::span<double> weights(std::size_t layer) {
    const auto l = layers().at(layer);
    return std::span<double>(values).subspan(l.weight_offset, l.rows * l.cols);
  }
  std::span<double> bias(std::size_t layer) {
    const auto l = layers().at(layer);
    return std::span<double>(values).subspan(l.bias_offset, l.rows);
  }

  void validate() const {
    spec.validate();
    require(values.size() == parameter_count(spec), "Params: size does not match spec");
    for (double v : values) {
      if (!std::isfinite(v)) throw NumericalError("Params: non-finite entry");
    }
  }
};

// Weights ~ N(0, 1/fan_in), biases zero. Deterministic in spec.seed.
inline Params init_params(const MLPSpec& spec) {
  spec.validate();
  Params p{spec, std::vector<double>(parameter_count(spec), 0.0)};
  Rng rng(spec.seed);
  for (const auto& l : layer_layout(spec)) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(l.cols));
    for (std::size_t i = 0; i < l.rows * l.cols; ++i) {
      p.values[l.weight_offset + i] = scale * rng.normal();
    }
  }
  return p;
}

template <class X>
X activate(const X& x, Activation a) {
  using std::tanh;
  using diffkit::softplus;
  using diffkit::tanh;
  return a == Activation::tanh ? tanh(x) : softplus(x);
}

// Forward pass. P is the parameter scalar (double or Var), X the input scalar
// (double, Var, Dual<double>, Dual<Var>). Hidden layers apply the activation;
// the output layer is affine.
template <class P, class X>
auto forward(const MLPSpec& spec, std::span<const P> params, std::span<const X> u) {
  require_dims(u.size() == spec.input_dim, "score model: input dimension mismatch");
  using Y = diffkit::promote_t<P, X>;
  const auto layers = layer_layout(spec);

  auto apply = [&](const LayerShape& l, auto input) {
    using In = typename decltype(input)::value_type;
    return diffkit::affine<P, In>(params.subspan(l.weight_offset, l.rows * l.cols),
                                  std::span<const In>(input),
                                  params.subspan(l.bias_offset, l.rows));
  };

  std::vector<Y> h = apply(layers.front(), std::vector<X>(u.begin(), u.end()));
  for (std::size_t i = 1; i < layers.size(); ++i) {
    for (auto& x : h) x = activate(x, spec.activation);
    h = apply(layers[i], std::move(h));
  }
  return h;
}

template <class P, class X>
auto forward(const MLPSpec& spec, const std::vector<P>& params, const std::vector<X>& u) {
  return forward<P, X>(spec, std::span<const P>(params), std::span<const X>(u));
}

// Score s_θ(u) ≈ ∇_u log p(u).
inline std::vector<double> score(const Params& params, std::span<const double> u) {
  auto s = forward<double, double>(params.spec, params.values, u);
  for (double x : s) {
    if (!std::isfinite(x)) throw NumericalError("score: non-finite network output");
  }
  return s;
}

inline std::vector<double> score(const Params& params, const std::vector<double>& u) {
  return score(params, std::span<const double>(u));
}

struct ScoreJvp {
  std::vector<double> s;
  std::vector<double> jv;
};

// Score and its Jacobian (in u) applied to v, in one forward-mode pass.
inline ScoreJvp score_jvp(const Params& params, std::span<const double> u,
                          std::span<const double> v) {
  auto r = diffkit::jvp(
      [&](std::span<const diffkit::Dual<double>> x) {
        return forward<double, diffkit::Dual<double>>(params.spec, params.values, x);
      },
      u, v);
  for (std::size_t i = 0; i < r.value.size(); ++i) {
    if (!std::isfinite(r.value[i]) || !std::isfinite(r.directional[i])) {
      throw NumericalError("score_jvp: non-finite network output");
    }
  }
  return {std::move(r.value), std::move(r.directional)};
}

inline ScoreJvp score_jvp(const Params& params, const std::vector<double>& u,
                          const std::vector<double>& v) {
  return score_jvp(params, std::span<const double>(u), std::span<const double>(v));
}

}  // namespace dppm::scoremodel
