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
#include <type_traits>

#include "dppm/diffkit/tape.hpp"

namespace dppm::diffkit {

// Forward-mode carrier: primal value plus a directional derivative.
//
// T is either double (plain forward mode) or Var, in which case every primal
// and tangent operation is itself recorded on a tape. The latter is what makes
// reverse-over-forward second-order terms possible.
template <class T>
struct Dual {
  using value_type = T;

  T primal{};
  T tangent{};
};

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};
template <class T>
inline constexpr bool is_dual_v = is_dual<T>::value;

template <class T>
Dual<T> constant(T value) {
  return Dual<T>{value, T{}};
}

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  return {a.primal + b.primal, a.tangent + b.tangent};
}
template <class T>
Dual<T> operator+(const Dual<T>& a, double b) {
  return {a.primal + b, a.tangent};
}
template <class T>
Dual<T> operator+(double a, const Dual<T>& b) {
  return {a + b.primal, b.tangent};
}

template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  return {a.primal - b.primal, a.tangent - b.tangent};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, double b) {
  return {a.primal - b, a.tangent};
}
template <class T>
Dual<T> operator-(double a, const Dual<T>& b) {
  return {a - b.primal, -b.tangent};
}
template <class T>
Dual<T> operator-(const Dual<T>& a) {
  return {-a.primal, -a.tangent};
}

template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.primal * b.primal, a.tangent * b.primal + a.primal * b.tangent};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, double b) {
  return {a.primal * b, a.tangent * b};
}
template <class T>
Dual<T> operator*(double a, const Dual<T>& b) {
  return {a * b.primal, a * b.tangent};
}

template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  const T q = a.primal / b.primal;
  return {q, (a.tangent - q * b.tangent) / b.primal};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, double b) {
  return {a.primal / b, a.tangent / b};
}
template <class T>
Dual<T> operator/(double a, const Dual<T>& b) {
  const T q = a / b.primal;
  return {q, -(q * b.tangent) / b.primal};
}

template <class T>
Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  const T e = exp(a.primal);
  return {e, a.tangent * e};
}

template <class T>
Dual<T> log(const Dual<T>& a) {
  using std::log;
  return {log(a.primal), a.tangent / a.primal};
}

template <class T>
Dual<T> tanh(const Dual<T>& a) {
  using std::tanh;
  const T t = tanh(a.primal);
  return {t, a.tangent * (1.0 - t * t)};
}

template <class T>
Dual<T> softplus(const Dual<T>& a) {
  return {softplus(a.primal), a.tangent * sigmoid(a.primal)};
}

template <class T>
Dual<T> sigmoid(const Dual<T>& a) {
  const T s = sigmoid(a.primal);
  return {s, a.tangent * (s * (1.0 - s))};
}

}  // namespace dppm::diffkit
