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

#include <cstddef>
#include <span>
#include <type_traits>
#include <vector>

#include "dppm/diffkit/dual.hpp"
#include "dppm/diffkit/tape.hpp"
#include "dppm/errors.hpp"

namespace dppm::diffkit {

// Result scalar when combining a parameter scalar P with an input scalar X.
// Anything touching a Var is taped.
template <class P, class X>
struct promote {
  using type = std::conditional_t<std::is_same_v<P, double> && std::is_same_v<X, double>,
                                  double, Var>;
};
template <class P, class T>
struct promote<P, Dual<T>> {
  using type = Dual<typename promote<P, T>::type>;
};
template <class P, class X>
using promote_t = typename promote<P, X>::type;

namespace detail {

template <class X>
std::vector<typename X::value_type> primals(std::span<const X> xs) {
  std::vector<typename X::value_type> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x.primal);
  return out;
}

template <class X>
std::vector<typename X::value_type> tangents(std::span<const X> xs) {
  std::vector<typename X::value_type> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x.tangent);
  return out;
}

template <class A, class B>
Tape& tape_of(std::span<const A> a, std::span<const B> b) {
  if constexpr (std::is_same_v<A, Var>) {
    if (!a.empty()) return a.front().tape();
  }
  if constexpr (std::is_same_v<B, Var>) {
    if (!b.empty()) return b.front().tape();
  }
  throw ConfigError("taped primitive called without any tape variable");
}

}  // namespace detail

// y = W x + b with W row-major (rows x cols), cols = x.size(). An empty `bias`
// gives the purely linear map. For Var operands each output row is a single
// tape node with one edge per weight, input, and bias entry.
template <class P, class X>
std::vector<promote_t<P, X>> affine(std::span<const P> weights, std::span<const X> x,
                                    std::span<const P> bias) {
  const std::size_t cols = x.size();
  require_dims(cols > 0 && weights.size() % cols == 0,
               "affine: weight count is not a multiple of the input dimension");
  const std::size_t rows = weights.size() / cols;
  require_dims(bias.empty() || bias.size() == rows, "affine: bias length mismatch");

  if constexpr (is_dual_v<X>) {
    using T = typename X::value_type;
    const auto xp = detail::primals(x);
    const auto xt = detail::tangents(x);
    const auto primal = affine<P, T>(weights, xp, bias);
    const auto tangent = affine<P, T>(weights, xt, std::span<const P>{});
    std::vector<promote_t<P, X>> y(rows);
    for (std::size_t j = 0; j < rows; ++j) y[j] = {primal[j], tangent[j]};
    return y;
  } else if constexpr (std::is_same_v<promote_t<P, X>, double>) {
    std::vector<double> y(rows);
    for (std::size_t j = 0; j < rows; ++j) {
      double acc = bias.empty() ? 0.0 : bias[j];
      const double* w = weights.data() + j * cols;
      for (std::size_t k = 0; k < cols; ++k) acc += w[k] * x[k];
      y[j] = acc;
    }
    return y;
  } else {
    Tape& tape = detail::tape_of(weights, x);
    std::vector<Var> y;
    y.reserve(rows);
    for (std::size_t j = 0; j < rows; ++j) {
      double acc = bias.empty() ? 0.0 : value_of(bias[j]);
      const P* w = weights.data() + j * cols;
      for (std::size_t k = 0; k < cols; ++k) {
        const double wv = value_of(w[k]);
        const double xv = value_of(x[k]);
        acc += wv * xv;
        if constexpr (std::is_same_v<P, Var>) tape.edge(w[k].id(), xv);
        if constexpr (std::is_same_v<X, Var>) tape.edge(x[k].id(), wv);
      }
      if constexpr (std::is_same_v<P, Var>) {
        if (!bias.empty()) tape.edge(bias[j].id(), 1.0);
      }
      y.emplace_back(tape, tape.push(acc));
    }
    return y;
  }
}

template <class P, class X>
std::vector<promote_t<P, X>> linear(std::span<const P> weights, std::span<const X> x) {
  return affine<P, X>(weights, x, std::span<const P>{});
}

// Inner product a . b as one node (or a plain double).
template <class A, class B>
promote_t<A, B> dot(std::span<const A> a, std::span<const B> b) {
  require_dims(a.size() == b.size(), "dot: length mismatch");
  static_assert(!is_dual_v<A> && !is_dual_v<B>, "dot over duals: use jvp");
  if constexpr (std::is_same_v<promote_t<A, B>, double>) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
  } else {
    Tape& tape = detail::tape_of(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double av = value_of(a[i]);
      const double bv = value_of(b[i]);
      acc += av * bv;
      if constexpr (std::is_same_v<A, Var>) tape.edge(a[i].id(), bv);
      if constexpr (std::is_same_v<B, Var>) tape.edge(b[i].id(), av);
    }
    return Var(tape, tape.push(acc));
  }
}

template <class A, class B>
promote_t<A, B> dot(const std::vector<A>& a, const std::vector<B>& b) {
  return dot<A, B>(std::span<const A>(a), std::span<const B>(b));
}

}  // namespace dppm::diffkit
