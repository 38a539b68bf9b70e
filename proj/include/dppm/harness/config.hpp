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

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dppm/errors.hpp"
#include "dppm/privacy/randomized_response.hpp"
#include "dppm/sampler/chain.hpp"
#include "dppm/scoremodel/mlp.hpp"
#include "dppm/training/trainer.hpp"

namespace dppm::harness {

using KeyValues = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

// One `key = value` per line; blank lines and lines starting with '#' are
// skipped. Later duplicates override earlier ones.
inline KeyValues parse_key_values(std::istream& is, const std::string& source) {
  KeyValues kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const auto key = detail::trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = detail::trim(t.substr(eq + 1));
  }
  return kv;
}

inline KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_key_values(is, path.string());
}

// "key=value" from the command line.
inline std::pair<std::string, std::string> parse_override(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
  return {detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1))};
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Everything one pipeline run needs. Parsed from key = value text.
struct RunConfig {
  std::string data = "mixture2(6)";  // generator spec or dataset path
  std::size_t n_data = 4000;
  double test_fraction = 0.25;
  std::uint64_t seed = 1;

  std::vector<std::size_t> hidden = {64, 64};
  scoremodel::Activation activation = scoremodel::Activation::tanh;
  std::size_t embed_dim = 8;

  training::TrainConfig train;
  sampler::SamplerConfig sampler;

  std::size_t n_generate = 2000;
  std::size_t classifier_epochs = 200;
  double classifier_lr = 0.5;

  // Not part of the configuration hash: they change where results go and
  // how fast, not what they are.
  std::string output;
  unsigned threads = 0;

  RunConfig() {
    train.iterations = 2000;
    train.learning_rate = 1e-3;
    sampler.lambda0 = 0.01;
    sampler.M = 10;
    sampler.N = 100;
    sampler.max_multiplier = 1.0;
  }

  void validate() const {
    require(!data.empty(), "config: data must name a generator or a file");
    require(test_fraction > 0.0 && test_fraction < 1.0, "config: test_fraction must be in (0, 1)");
    require(embed_dim >= 1, "config: embed_dim must be positive");
    require(n_generate >= 2, "config: n_generate must be at least 2");
    require(classifier_epochs >= 1 && classifier_lr > 0.0, "config: bad classifier settings");
    train.validate();
    sampler.validate();
  }
};

namespace detail {

// Shortest text that reads back as exactly `v`.
inline std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + "'" + v + "' is not a number");
  return out;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    if (!v.empty() && v.front() != '-') out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    throw ConfigError(key + "'" + v + "' is not a non-negative integer");
  }
  return out;
}

inline std::vector<std::size_t> to_widths(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  if (trim(v).empty() || trim(v) == "none") return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_uint(key, trim(item)));
  return out;
}

inline std::string from_widths(const std::vector<std::size_t>& w) {
  if (w.empty()) return "none";
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
  return s;
}

inline training::ProjectionMechanism parse_mechanism(const std::string& s) {
  if (s == "randomized_response") return training::ProjectionMechanism::randomized_response;
  if (s == "none") return training::ProjectionMechanism::none;
  throw ConfigError("unknown mechanism '" + s + "'");
}

inline std::string to_string(training::ProjectionMechanism m) {
  return m == training::ProjectionMechanism::none ? "none" : "randomized_response";
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
  bool hashed = true;
};

inline const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    auto num = [](auto getter) {
      return Field{[getter](const RunConfig& c) { return fmt(getter(const_cast<RunConfig&>(c))); },
                   [getter](RunConfig& c, const std::string& v) { getter(c) = to_double("", v); }};
    };
    auto count = [](auto getter) {
      return Field{[getter](const RunConfig& c) { return std::to_string(getter(const_cast<RunConfig&>(c))); },
                   [getter](RunConfig& c, const std::string& v) {
                     using T = std::remove_reference_t<decltype(getter(c))>;
                     getter(c) = static_cast<T>(to_uint("", v));
                   }};
    };
    f["data"] = {[](const RunConfig& c) { return c.data; },
                 [](RunConfig& c, const std::string& v) { c.data = v; }};
    f["n_data"] = count([](RunConfig& c) -> auto& { return c.n_data; });
    f["test_fraction"] = num([](RunConfig& c) -> auto& { return c.test_fraction; });
    f["seed"] = count([](RunConfig& c) -> auto& { return c.seed; });
    f["hidden"] = {[](const RunConfig& c) { return from_widths(c.hidden); },
                   [](RunConfig& c, const std::string& v) { c.hidden = to_widths("", v); }};
    f["activation"] = {[](const RunConfig& c) { return scoremodel::to_string(c.activation); },
                       [](RunConfig& c, const std::string& v) { c.activation = scoremodel::parse_activation(v); }};
    f["embed_dim"] = count([](RunConfig& c) -> auto& { return c.embed_dim; });
    f["embed_noise"] = num([](RunConfig& c) -> auto& { return c.train.embed_noise; });
    f["batch_size"] = count([](RunConfig& c) -> auto& { return c.train.batch_size; });
    f["iterations"] = count([](RunConfig& c) -> auto& { return c.train.iterations; });
    f["checkpoint_interval"] = count([](RunConfig& c) -> auto& { return c.train.checkpoint_interval; });
    f["learning_rate"] = num([](RunConfig& c) -> auto& { return c.train.learning_rate; });
    f["optimizer"] = {[](const RunConfig& c) { return training::to_string(c.train.optimizer.kind); },
                      [](RunConfig& c, const std::string& v) { c.train.optimizer.kind = training::parse_optimizer(v); }};
    f["epsilon"] = num([](RunConfig& c) -> auto& { return c.train.rr.epsilon; });
    f["k"] = count([](RunConfig& c) -> auto& { return c.train.rr.k; });
    f["mechanism"] = {[](const RunConfig& c) { return to_string(c.train.mechanism); },
                      [](RunConfig& c, const std::string& v) { c.train.mechanism = parse_mechanism(v); }};
    f["lambda0"] = num([](RunConfig& c) -> auto& { return c.sampler.lambda0; });
    f["M"] = count([](RunConfig& c) -> auto& { return c.sampler.M; });
    f["N"] = count([](RunConfig& c) -> auto& { return c.sampler.N; });
    f["max_multiplier"] = num([](RunConfig& c) -> auto& { return c.sampler.max_multiplier; });
    f["kinetic"] = {[](const RunConfig& c) { return sampler::to_string(c.sampler.kinetic.kind); },
                    [](RunConfig& c, const std::string& v) { c.sampler.kinetic.kind = sampler::parse_kinetic(v); }};
    f["kinetic_sigma"] = num([](RunConfig& c) -> auto& { return c.sampler.kinetic.sigma; });
    f["kinetic_lo"] = num([](RunConfig& c) -> auto& { return c.sampler.kinetic.lo; });
    f["kinetic_hi"] = num([](RunConfig& c) -> auto& { return c.sampler.kinetic.hi; });
    f["metropolis"] = {[](const RunConfig& c) { return sampler::to_string(c.sampler.metropolis); },
                       [](RunConfig& c, const std::string& v) { c.sampler.metropolis = sampler::parse_metropolis(v); }};
    f["path_steps"] = count([](RunConfig& c) -> auto& { return c.sampler.path_steps; });
    f["init_lo"] = num([](RunConfig& c) -> auto& { return c.sampler.init_lo; });
    f["init_hi"] = num([](RunConfig& c) -> auto& { return c.sampler.init_hi; });
    f["n_generate"] = count([](RunConfig& c) -> auto& { return c.n_generate; });
    f["classifier_epochs"] = count([](RunConfig& c) -> auto& { return c.classifier_epochs; });
    f["classifier_lr"] = num([](RunConfig& c) -> auto& { return c.classifier_lr; });
    f["output"] = {[](const RunConfig& c) { return c.output; },
                   [](RunConfig& c, const std::string& v) { c.output = v; }, false};
    f["threads"] = count([](RunConfig& c) -> auto& { return c.threads; });
    f["threads"].hashed = false;
    return f;
  }();
  return table;
}

}  // namespace detail

inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = detail::fields();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("config: unknown key '" + key + "'");
  try {
    it->second.set(cfg, value);
  } catch (const ConfigError& e) {
    throw ConfigError("config: " + key + ": " + e.what());
  }
}

// Defaults, then the file's settings, then command-line overrides in order.
inline RunConfig make_run_config(const KeyValues& file, const std::vector<std::string>& overrides = {}) {
  RunConfig cfg;
  for (const auto& [k, v] : file) apply_setting(cfg, k, v);
  for (const auto& o : overrides) {
    const auto [k, v] = parse_override(o);
    apply_setting(cfg, k, v);
  }
  cfg.validate();
  return cfg;
}

// Sorted key=value lines of every hashed setting.
inline std::string canonical(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, field] : detail::fields()) {
    if (field.hashed) out += key + "=" + field.get(cfg) + "\n";
  }
  return out;
}

inline std::string config_hash(const RunConfig& cfg) { return hex64(fnv1a64(canonical(cfg))); }

inline std::string dump(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, field] : detail::fields()) out += key + " = " + field.get(cfg) + "\n";
  return out;
}

}  // namespace dppm::harness
