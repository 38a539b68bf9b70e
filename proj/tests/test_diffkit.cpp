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

#include <gtest/gtest.h>

#include <cmath>
#include <span>
#include <vector>

#include "dppm/diffkit.hpp"
#include "dppm/training/ssm_loss.hpp"
#include "test_util.hpp"

using namespace dppm;
using namespace dppm::diffkit;
using dppm::testing::central_diff;
using dppm::testing::max_rel_err;

namespace {

template <class T>
concept HasSin = requires(T t) { sin(t); };
static_assert(HasSin<double>);
static_assert(!HasSin<Var>, "sin is not a supported primitive");
static_assert(!HasSin<Dual<Var>>);

using Vec = std::vector<double>;

TEST(Grad, Square) {
  const Vec x{3.0};
  const auto g = grad([](std::span<const Var> v) { return v[0] * v[0]; }, x);
  EXPECT_DOUBLE_EQ(g[0], 6.0);
}

TEST(Grad, Log) {
  const Vec x{2.0};
  const auto g = grad([](std::span<const Var> v) { return log(v[0]); }, x);
  EXPECT_DOUBLE_EQ(g[0], 0.5);
}

TEST(Grad, HalfSquaredNorm) {
  const Vec u{1.0, -2.0, 3.0};
  const auto g = grad([](std::span<const Var> v) { return 0.5 * dot<Var, Var>(v, v); }, u);
  EXPECT_EQ(g, u);
}

TEST(Grad, InputUnusedGetsZero) {
  const Vec x{1.0, 2.0};
  const auto g = grad([](std::span<const Var> v) { return exp(v[0]); }, x);
  EXPECT_DOUBLE_EQ(g[0], std::exp(1.0));
  EXPECT_EQ(g[1], 0.0);
}

TEST(Grad, NonFiniteCarriesNodeId) {
  const Vec x{2.0, 0.0};
  try {
    grad([](std::span<const Var> v) { return v[0] * log(v[1]); }, x);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_EQ(e.node(), 2);  // nodes 0 and 1 are the inputs
  }
}

TEST(Grad, DivisionByZeroIsNonFinite) {
  const Vec x{1.0, 0.0};
  EXPECT_THROW(grad([](std::span<const Var> v) { return v[0] / v[1]; }, x), NumericalError);
}

TEST(Tape, TopologicalOrder) {
  Tape tape;
  std::vector<Var> in;
  for (double x : {0.3, -1.2, 0.7}) in.emplace_back(tape, tape.variable(x));
  const Vec w{1, 2, 3, 4, 5, 6};
  const auto h = affine<double, Var>(w, in, Vec{0.1, 0.2});
  const Var out = tanh(h[0]) * softplus(h[1]) / (1.0 + exp(h[0]));
  ASSERT_GT(tape.edge_count(), 0u);
  for (NodeId id = 0; id <= out.id(); ++id) {
    for (NodeId input : tape.inputs(id)) EXPECT_LT(input, id);
  }
}

TEST(Tape, ReverseSweepMatchesFiniteDifferences) {
  auto f = [](auto x0, auto x1) { return x0 * x1 - x0 / (1.0 + x1 * x1) + exp(0.5 * x0); };
  Tape tape;
  const Var a(tape, tape.variable(0.4));
  const Var b(tape, tape.variable(-1.3));
  const Var out = f(a, b);
  const auto adj = tape.backward(out.id());
  const Vec x{0.4, -1.3};
  const auto fd = central_diff([&](std::span<const double> p) { return f(p[0], p[1]); }, x);
  EXPECT_NEAR(adj[0], fd[0], 1e-8);
  EXPECT_NEAR(adj[1], fd[1], 1e-8);
}

TEST(Taping, PrimalUnchanged) {
  Rng rng(7);
  const scoremodel::MLPSpec spec{3, {16, 16}, scoremodel::Activation::softplus, 3, 11};
  const auto params = scoremodel::init_params(spec);
  const Vec u = dppm::testing::normal_vector(rng, 3);
  const auto plain = scoremodel::forward<double, double>(spec, params.values, u);
  Tape tape;
  std::vector<Var> p;
  for (double x : params.values) p.emplace_back(tape, tape.variable(x));
  const auto taped = scoremodel::forward<Var, double>(spec, std::span<const Var>(p), u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(taped[i].value(), plain[i]);
}

TEST(Taping, Idempotent) {
  const Vec x{0.3, -0.8, 1.5};
  auto f = [](std::span<const Var> v) { return tanh(v[0] * v[1]) + softplus(v[2]) * sigmoid(v[0]); };
  auto run = [&] {
    Tape tape;
    std::vector<Var> in;
    for (double xi : x) in.emplace_back(tape, tape.variable(xi));
    f(in);
    Vec values;
    for (std::size_t i = 0; i < tape.size(); ++i) values.push_back(tape.value(static_cast<NodeId>(i)));
    return values;
  };
  const auto first = run();
  const auto second = run();
  ASSERT_EQ(first.size(), second.size());
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(first[i], second[i]);
}

TEST(Jvp, Negation) {
  const auto r = jvp([](std::span<const Dual<double>> u) {
    std::vector<Dual<double>> y;
    for (const auto& x : u) y.push_back(-x);
    return y;
  }, Vec{0.7, -2.0}, Vec{1.0, 0.0});
  EXPECT_EQ(r.directional, (Vec{-1.0, 0.0}));
  EXPECT_EQ(r.value, (Vec{-0.7, 2.0}));
}

TEST(Jvp, MatrixVector) {
  const Vec W{1, 2, 3, 4};
  const auto r = jvp([&](std::span<const Dual<double>> u) { return linear<double, Dual<double>>(W, u); },
                     Vec{0.5, -1.0}, Vec{1.0, 1.0});
  EXPECT_EQ(r.directional, (Vec{3.0, 7.0}));
}

TEST(Jvp, HandJacobian) {
  const auto r = jvp([](std::span<const Dual<double>> u) { return std::vector<Dual<double>>{u[0] * u[0], u[1]}; },
                     Vec{2.0, 5.0}, Vec{1.0, 0.0});
  EXPECT_EQ(r.directional, (Vec{4.0, 0.0}));
  EXPECT_EQ(r.value, (Vec{4.0, 5.0}));
}

TEST(Jvp, DimensionMismatch) {
  auto id = [](std::span<const Dual<double>> u) { return std::vector<Dual<double>>(u.begin(), u.end()); };
  EXPECT_THROW(jvp(id, Vec{1.0, 2.0}, Vec{1.0}), DimensionError);
}

TEST(Jvp, ConstantHasZeroTangent) {
  const auto c = constant(3.5);
  EXPECT_EQ(c.primal, 3.5);
  EXPECT_EQ(c.tangent, 0.0);
}

// Each primitive applied to a 3-vector; jvp along e_i must match column i of
// the central-difference Jacobian.
template <class X>
std::vector<X> primitive_case(int which, std::span<const X> x) {
  static const Vec W{0.5, -1.0, 2.0, 1.5, 0.3, -0.7};
  static const Vec b{0.1, -0.2};
  switch (which) {
    case 0: return {x[0] + x[1], x[1] - x[2], x[2] + 2.0, 1.0 - x[0]};
    case 1: return {x[0] * x[1], 3.0 * x[2], x[0] * x[0] * x[2]};
    case 2: return {x[0] / x[1], 2.0 / x[2], x[1] / 4.0};
    case 3: return {exp(x[0]), exp(x[1] - x[2])};
    case 4: return {log(x[0] * x[0] + 1.0), log(x[1] * x[1] + x[2] * x[2])};
    case 5: return {tanh(x[0]), tanh(x[1] * x[2])};
    case 6: return {softplus(x[0]), softplus(-3.0 * x[1]), softplus(x[2] * 40.0)};
    case 7: return {sigmoid(x[0] + x[1]), sigmoid(x[2])};
    default: return affine<double, X>(W, x, b);
  }
}

TEST(Jvp, EveryPrimitiveMatchesFiniteDifferenceJacobian) {
  using std::exp;
  using std::log;
  using std::tanh;
  const Vec x{0.6, -1.1, 0.35};
  for (int which = 0; which <= 8; ++which) {
    SCOPED_TRACE(which);
    const std::size_t m = primitive_case<double>(which, x).size();
    for (std::size_t i = 0; i < x.size(); ++i) {
      Vec e(3, 0.0);
      e[i] = 1.0;
      const auto r = jvp([&](std::span<const Dual<double>> u) { return primitive_case(which, u); }, x, e);
      ASSERT_EQ(r.directional.size(), m);
      for (std::size_t j = 0; j < m; ++j) {
        auto fj = [&](std::span<const double> p) { return primitive_case<double>(which, p)[j]; };
        const double fd = central_diff(fj, x, 1e-6)[i];
        EXPECT_NEAR(r.directional[j], fd, 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST(Jvp, DotMatchesGradient) {
  const Vec a{1.5, -2.0, 0.25};
  const auto g = grad([&](std::span<const Var> v) { return dot<double, Var>(a, v); }, Vec{3.0, 1.0, -1.0});
  EXPECT_EQ(g, a);
}

// vᵀ W v for the linear score s(u) = W u, differentiated with respect to W.
TEST(GradThroughJvp, LinearScoreGivesOuterProduct) {
  auto loss = [](std::span<const Var> W, std::span<const double> u, std::span<const double> v) {
    const auto r = jvp([&](std::span<const Dual<double>> x) { return linear<Var, Dual<double>>(W, x); }, u, v);
    return dot<double, Var>(v, r.directional);
  };
  const Vec W{0.3, -1.0, 2.0, 0.5};
  const auto g = grad_through_jvp(loss, W, Vec{0.2, 0.9}, Vec{1.0, 2.0});
  EXPECT_EQ(g, (Vec{1.0, 2.0, 2.0, 4.0}));
}

TEST(GradThroughJvp, ParameterFreeLossHasZeroGradient) {
  auto loss = [](std::span<const Var> p, std::span<const double> u, std::span<const double> v) {
    Tape& tape = p[0].tape();
    return Var(tape, tape.variable(dot<double, double>(u, v)));
  };
  const auto g = grad_through_jvp(loss, Vec{1.0, 2.0, 3.0}, Vec{1.0, 1.0}, Vec{0.5, 0.5});
  EXPECT_EQ(g, (Vec{0.0, 0.0, 0.0}));
}

TEST(GradThroughJvp, NonFiniteLossThrows) {
  auto loss = [](std::span<const Var> p, std::span<const double>, std::span<const double>) {
    return log(p[0] - p[0]);
  };
  EXPECT_THROW(grad_through_jvp(loss, Vec{1.0}, Vec{1.0}, Vec{1.0}), NumericalError);
}

double check_network(const scoremodel::MLPSpec& spec, Rng& rng) {
  const auto params = scoremodel::init_params(spec);
  const auto u = dppm::testing::normal_vector(rng, spec.input_dim);
  const auto v = dppm::testing::normal_vector(rng, spec.input_dim);
  const auto v_r = dppm::testing::normal_vector(rng, spec.input_dim);
  auto loss = [&](std::span<const Var> p, std::span<const double> x, std::span<const double> dir) {
    return training::sample_loss(spec, p, x, v, dir);
  };
  const auto g = grad_through_jvp(loss, params.values, u, v_r);
  auto value = [&](std::span<const double> theta) {
    scoremodel::Params p{spec, Vec(theta.begin(), theta.end())};
    return training::sample_loss_value(p, u, v, v_r);
  };
  return max_rel_err(g, central_diff(value, params.values));
}

TEST(GradThroughJvp, OneHiddenLayerTanhMatchesFiniteDifferences) {
  Rng rng(4);
  const scoremodel::MLPSpec spec{4, {8}, scoremodel::Activation::tanh, 4, 21};
  EXPECT_LT(check_network(spec, rng), 1e-4);
}

TEST(GradThroughJvp, RandomNetworksMatchFiniteDifferences) {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const auto spec = dppm::testing::random_spec(rng);
    SCOPED_TRACE(trial);
    EXPECT_LT(check_network(spec, rng), 1e-4);
  }
}

TEST(Hutchinson, MeanOfQuadraticFormIsTrace) {
  Rng rng(99);
  const Vec A{2.0, -1.0, 0.5, 0.3, -0.7, 1.2, 4.0, 0.0, 1.5};
  const double trace = 2.0 - 0.7 + 1.5;
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto v = dppm::testing::normal_vector(rng, 3);
    const auto r = jvp([&](std::span<const Dual<double>> x) { return linear<double, Dual<double>>(A, x); }, v, v);
    const double q = dot<double, double>(v, r.directional);
    sum += q;
    sum2 += q * q;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  EXPECT_LT(std::abs(mean - trace), 3.0 * se);
}

TEST(FiniteDiffCheck, Square) {
  const Vec x{3.0}, g{6.0};
  EXPECT_LT(finite_diff_check([](std::span<const double> p) { return p[0] * p[0]; }, x, g, 1e-5), 1e-6);
}

TEST(FiniteDiffCheck, SoftplusAtZero) {
  const Vec x{0.0}, g{0.5};
  EXPECT_LT(finite_diff_check([](std::span<const double> p) { return softplus(p[0]); }, x, g, 1e-5), 1e-6);
}

TEST(FiniteDiffCheck, QuadraticWithKnownHessian) {
  Rng rng(5);
  const std::size_t n = 10;
  Vec M(n * n), H(n * n, 0.0);
  for (auto& m : M) m = rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) H[i * n + j] += M[k * n + i] * M[k * n + j];
    }
  }
  const auto b = dppm::testing::normal_vector(rng, n);
  const auto x = dppm::testing::normal_vector(rng, n);
  auto f = [&](std::span<const double> p) {
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      q += b[i] * p[i];
      for (std::size_t j = 0; j < n; ++j) q += 0.5 * p[i] * H[i * n + j] * p[j];
    }
    return q;
  };
  Vec g(b);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) g[i] += H[i * n + j] * x[j];
  }
  EXPECT_LT(finite_diff_check(f, x, g, 1e-5), 1e-6);
}

TEST(FiniteDiffCheck, RejectsNonPositiveStep) {
  const Vec x{1.0}, g{2.0};
  EXPECT_THROW(finite_diff_check([](std::span<const double> p) { return p[0]; }, x, g, 0.0), ConfigError);
}

}  // namespace
