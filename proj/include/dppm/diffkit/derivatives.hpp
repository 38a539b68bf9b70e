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
#include <type_traits>
#include <utility>
#include <vector>

#include "dppm/diffkit/dual.hpp"
#include "dppm/diffkit/primitives.hpp"
#include "dppm/diffkit/tape.hpp"
#include "dppm/errors.hpp"

namespace dppm::diffkit {

template <class T>
struct JvpResult {
  std::vector<T> value;
  std::vector<T> directional;
};

// Gradient of a scalar function by one reverse sweep. `f` is called with a
// std::span<const Var> and must return a Var built from supported primitives;
// anything else does not compile.
template <class F>
std::vector<double> grad(F&& f, std::span<const double> x) {
  Tape tape;
  std::vector<Var> inputs;
  inputs.reserve(x.size());
  for (double xi : x) inputs.emplace_back(tape, tape.variable(xi));
  const Var out = f(std::span<const Var>(inputs));
  const auto adjoint = tape.backward(out.id());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto id = static_cast<std::size_t>(inputs[i].id());
    g[i] = id < adjoint.size() ? adjoint[id] : 0.0;
  }
  return g;
}

// Forward-mode Jacobian-vector product: returns g(x) and J_g(x) v.
//
// `g` receives std::span<const Dual<T>> and returns a vector of duals. With
// T = double this is plain forward mode; if g closes over Var parameters the
// result lives on their tape and can be differentiated again.
template <class G, class T>
auto jvp(G&& g, std::span<const T> x, std::span<const T> v) {
  require_dims(x.size() == v.size(), "jvp: direction has a different dimension than the point");
  std::vector<Dual<T>> xd(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xd[i] = Dual<T>{x[i], v[i]};
  const auto out = g(std::span<const Dual<T>>(xd));
  using R = typename std::decay_t<decltype(out)>::value_type::value_type;
  JvpResult<R> result;
  result.value.reserve(out.size());
  result.directional.reserve(out.size());
  for (const auto& o : out) {
    result.value.push_back(o.primal);
    result.directional.push_back(o.tangent);
  }
  return result;
}

template <class G>
JvpResult<double> jvp(G&& g, const std::vector<double>& x, const std::vector<double>& v) {
  return jvp<G, double>(std::forward<G>(g), std::span<const double>(x),
                        std::span<const double>(v));
}

// Reusable storage for repeated reverse-over-forward evaluations.
struct GradWorkspace {
  Tape tape;
  std::vector<Var> params;
  std::vector<double> adjoint;
};

// Gradient with respect to `params` of a scalar loss that internally applies
// jvp (reverse-over-forward). `loss` is called as
//   loss(std::span<const Var> params, std::span<const double> x,
//        std::span<const double> v) -> Var
// and never materializes a Hessian. This overload adds `scale` times the
// gradient into `grad_out` and returns the loss value.
template <class Loss>
double grad_through_jvp(Loss&& loss, std::span<const double> params, std::span<const double> x,
                        std::span<const double> v, GradWorkspace& ws, std::span<double> grad_out,
                        double scale = 1.0) {
  require_dims(grad_out.size() == params.size(), "grad_through_jvp: gradient buffer size");
  ws.tape.clear();
  ws.params.clear();
  ws.params.reserve(params.size());
  for (double pi : params) ws.params.emplace_back(ws.tape, ws.tape.variable(pi));
  const Var out = loss(std::span<const Var>(ws.params), x, v);
  if (!std::isfinite(out.value())) throw NonFiniteError(out.id());
  ws.tape.backward(out.id(), ws.adjoint);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto id = static_cast<std::size_t>(ws.params[i].id());
    if (id < ws.adjoint.size()) grad_out[i] += scale * ws.adjoint[id];
  }
  return out.value();
}

template <class Loss>
std::vector<double> grad_through_jvp(Loss&& loss, std::span<const double> params,
                                     std::span<const double> x, std::span<const double> v) {
  GradWorkspace ws;
  std::vector<double> g(params.size(), 0.0);
  grad_through_jvp(std::forward<Loss>(loss), params, x, v, ws, std::span<double>(g));
  return g;
}

// Max over coordinates of |central difference - analytic| / (|analytic| + 1e-12).
// `f` maps std::span<const double> to double.
template <class F>
double finite_diff_check(F&& f, std::span<const double> x, std::span<const double> analytic,
                         double h) {
  require(h > 0.0, "finite_diff_check: step must be positive");
  require_dims(x.size() == analytic.size(), "finite_diff_check: gradient length mismatch");
  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(std::span<const double>(probe));
    probe[i] = x[i] - h;
    const double down = f(std::span<const double>(probe));
    probe[i] = x[i];
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - analytic[i]) / (std::abs(analytic[i]) + 1e-12));
  }
  return worst;
}

}  // namespace dppm::diffkit
