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
#include <cstdint>
#include <string>
#include <vector>

#include "dppm/errors.hpp"

namespace dppm::diffkit {

using NodeId = std::int32_t;

class NonFiniteError : public NumericalError {
 public:
  explicit NonFiniteError(NodeId node)
      : NumericalError("non-finite value at tape node " + std::to_string(node)),
        node_(node) {}

  NodeId node() const { return node_; }

 private:
  NodeId node_;
};

// Wengert list for reverse-mode differentiation.
//
// Each node stores its primal value and a contiguous run of (input, local
// partial) edges. Inputs always precede the node that consumes them, so one
// backward pass over the node array is a valid reverse sweep.
//
// Construction protocol: call edge() for each input of the next node, then
// push(value). A tape is single-writer while it is being built.
class Tape {
 public:
  Tape() { offsets_.push_back(0); }

  NodeId variable(double value) { return push(value); }

  void edge(NodeId input, double partial) {
    inputs_.push_back(input);
    partials_.push_back(partial);
  }

  NodeId push(double value) {
    const auto id = static_cast<NodeId>(values_.size());
    if (!std::isfinite(value)) {
      inputs_.resize(offsets_.back());
      partials_.resize(offsets_.back());
      throw NonFiniteError(id);
    }
    values_.push_back(value);
    offsets_.push_back(inputs_.size());
    return id;
  }

  double value(NodeId id) const { return values_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return values_.size(); }
  std::size_t edge_count() const { return inputs_.size(); }

  std::vector<NodeId> inputs(NodeId id) const {
    const auto i = static_cast<std::size_t>(id);
    return {inputs_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
            inputs_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1])};
  }

  void clear() {
    values_.clear();
    inputs_.clear();
    partials_.clear();
    offsets_.assign(1, 0);
  }

  // Reverse sweep from a scalar output. On return adjoint[i] holds
  // d output / d node i for every node i <= output.
  void backward(NodeId output, std::vector<double>& adjoint) const {
    const auto n = static_cast<std::size_t>(output) + 1;
    adjoint.assign(n, 0.0);
    adjoint[n - 1] = 1.0;
    for (std::size_t i = n; i-- > 0;) {
      const double a = adjoint[i];
      if (a == 0.0) continue;
      for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e) {
        adjoint[static_cast<std::size_t>(inputs_[e])] += a * partials_[e];
      }
    }
  }

  std::vector<double> backward(NodeId output) const {
    std::vector<double> adjoint;
    backward(output, adjoint);
    return adjoint;
  }

 private:
  std::vector<double> values_;
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> inputs_;
  std::vector<double> partials_;
};

// Handle to a tape node. Cheap to copy; the tape must outlive it.
class Var {
 public:
  Var() = default;
  Var(Tape& tape, NodeId id) : tape_(&tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  NodeId id() const { return id_; }
  double value() const { return tape_->value(id_); }

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = -1;
};

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

namespace detail {

inline Var unary(const Var& a, double value, double partial) {
  Tape& t = a.tape();
  t.edge(a.id(), partial);
  return Var(t, t.push(value));
}

inline Var binary(const Var& a, const Var& b, double value, double da, double db) {
  Tape& t = a.tape();
  t.edge(a.id(), da);
  t.edge(b.id(), db);
  return Var(t, t.push(value));
}

}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  return detail::binary(a, b, a.value() + b.value(), 1.0, 1.0);
}
inline Var operator+(const Var& a, double b) { return detail::unary(a, a.value() + b, 1.0); }
inline Var operator+(double a, const Var& b) { return detail::unary(b, a + b.value(), 1.0); }

inline Var operator-(const Var& a, const Var& b) {
  return detail::binary(a, b, a.value() - b.value(), 1.0, -1.0);
}
inline Var operator-(const Var& a, double b) { return detail::unary(a, a.value() - b, 1.0); }
inline Var operator-(double a, const Var& b) { return detail::unary(b, a - b.value(), -1.0); }
inline Var operator-(const Var& a) { return detail::unary(a, -a.value(), -1.0); }

inline Var operator*(const Var& a, const Var& b) {
  return detail::binary(a, b, a.value() * b.value(), b.value(), a.value());
}
inline Var operator*(const Var& a, double b) { return detail::unary(a, a.value() * b, b); }
inline Var operator*(double a, const Var& b) { return detail::unary(b, a * b.value(), a); }

inline Var operator/(const Var& a, const Var& b) {
  const double bv = b.value();
  return detail::binary(a, b, a.value() / bv, 1.0 / bv, -a.value() / (bv * bv));
}
inline Var operator/(const Var& a, double b) { return detail::unary(a, a.value() / b, 1.0 / b); }
inline Var operator/(double a, const Var& b) {
  const double bv = b.value();
  return detail::unary(b, a / bv, -a / (bv * bv));
}

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

// Scalar primitives, defined for double and Var with identical primal
// arithmetic so taping never perturbs a value.

inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Var exp(const Var& a) {
  const double e = std::exp(a.value());
  return detail::unary(a, e, e);
}

inline Var log(const Var& a) {
  return detail::unary(a, std::log(a.value()), 1.0 / a.value());
}

inline Var tanh(const Var& a) {
  const double t = std::tanh(a.value());
  return detail::unary(a, t, 1.0 - t * t);
}

inline Var softplus(const Var& a) {
  return detail::unary(a, softplus(a.value()), sigmoid(a.value()));
}

inline Var sigmoid(const Var& a) {
  const double s = sigmoid(a.value());
  return detail::unary(a, s, s * (1.0 - s));
}

}  // namespace dppm::diffkit
