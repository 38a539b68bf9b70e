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
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dppm/dataset.hpp"
#include "dppm/errors.hpp"
#include "dppm/harness/classifier.hpp"
#include "dppm/harness/config.hpp"
#include "dppm/harness/datasets.hpp"
#include "dppm/harness/io.hpp"
#include "dppm/harness/mmd.hpp"
#include "dppm/privacy/ledger.hpp"
#include "dppm/random.hpp"
#include "dppm/sampler/chain.hpp"
#include "dppm/scoremodel/embedding.hpp"
#include "dppm/scoremodel/mlp.hpp"
#include "dppm/scoremodel/serialization.hpp"
#include "dppm/training/trainer.hpp"

namespace dppm::harness {

// Seeds of the independent pipeline stages, all derived from cfg.seed.
enum class Stream : std::uint64_t { data = 10, split, embedding, model, training, sampling };

inline std::uint64_t stream_seed(const RunConfig& cfg, Stream s) {
  return Rng(cfg.seed).child(static_cast<std::uint64_t>(s)).seed();
}

// Re-throws a library error with the stage name prepended, keeping its
// config/numerical category.
template <class F>
auto run_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const NumericalError& e) {
    throw NumericalError(stage + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(stage + ": " + e.what());
  }
}

struct EvalReport {
  std::string config_hash;
  std::string dataset;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  std::size_t k = 0;
  std::size_t mechanism_invocations = 0;
  std::size_t n_generated = 0;
  std::size_t n_test = 0;
  double downstream_accuracy = std::numeric_limits<double>::quiet_NaN();
  double baseline_accuracy = std::numeric_limits<double>::quiet_NaN();
  double mmd2 = 0.0;  // clamped at zero
  double mmd2_raw = 0.0;
  double bandwidth = 0.0;
  std::vector<std::size_t> class_counts;
  double accept_rate = std::numeric_limits<double>::quiet_NaN();
  std::size_t estimator_failures = 0;

  std::vector<std::pair<std::string, std::string>> fields() const {
    auto counts = std::string();
    for (std::size_t i = 0; i < class_counts.size(); ++i) {
      counts += (i ? ";" : "") + std::to_string(class_counts[i]);
    }
    return {{"config_hash", config_hash},
            {"dataset", dataset},
            {"seed", std::to_string(seed)},
            {"epsilon", detail::fmt(epsilon)},
            {"delta", detail::fmt(delta)},
            {"k", std::to_string(k)},
            {"mechanism_invocations", std::to_string(mechanism_invocations)},
            {"n_generated", std::to_string(n_generated)},
            {"n_test", std::to_string(n_test)},
            {"downstream_accuracy", detail::fmt(downstream_accuracy)},
            {"baseline_accuracy", detail::fmt(baseline_accuracy)},
            {"mmd2", detail::fmt(mmd2)},
            {"mmd2_raw", detail::fmt(mmd2_raw)},
            {"mmd_bandwidth", detail::fmt(bandwidth)},
            {"class_counts", counts},
            {"accept_rate", detail::fmt(accept_rate)},
            {"estimator_failures", std::to_string(estimator_failures)}};
  }

  std::string to_key_values() const {
    std::string out;
    for (const auto& [k, v] : fields()) out += k + "=" + v + "\n";
    return out;
  }

  std::string csv_header() const {
    std::string out;
    for (const auto& [k, v] : fields()) out += (out.empty() ? "" : ",") + k;
    return out;
  }

  std::string csv_row() const {
    std::string out;
    bool first = true;
    for (const auto& [k, v] : fields()) {
      out += (first ? "" : ",") + v;
      first = false;
    }
    return out;
  }
};

// --- ledger file --------------------------------------------------------

inline std::string ledger_text(const privacy::PrivacyLedger& ledger) {
  std::string stages;
  for (const auto& s : ledger.post_processing()) stages += (stages.empty() ? "" : ";") + s;
  return "epsilon=" + detail::fmt(ledger.epsilon()) + "\n" + "delta=" + detail::fmt(ledger.delta()) +
         "\n" + "mechanism_invocations=" + std::to_string(ledger.mechanism_invocations()) + "\n" +
         "post_processing=" + stages + "\n";
}

inline privacy::PrivacyLedger parse_ledger(std::istream& is, const std::string& source) {
  const auto kv = parse_key_values(is, source);
  auto get = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(source + ": ledger is missing '" + key + "'");
    return it->second;
  };
  privacy::PrivacyLedger ledger(detail::to_double("epsilon ", get("epsilon")));
  if (detail::to_double("delta ", get("delta")) != 0.0) {
    throw FormatError(source + ": ledger reports a nonzero delta");
  }
  ledger.record_invocations(detail::to_uint("mechanism_invocations ", get("mechanism_invocations")));
  std::stringstream ss(get("post_processing"));
  std::string stage;
  while (std::getline(ss, stage, ';')) {
    if (!stage.empty()) ledger.register_post_processing(stage);
  }
  return ledger;
}

// --- output directory -----------------------------------------------------

// Single writer for everything a run puts on disk. Each file is recorded in
// manifest.txt with its kind; no kind carries raw private features.
class OutputDir {
 public:
  enum class Kind { config, model, embedding, loss, samples, samples_manifest, ledger, report };

  // Entries already listed in an existing manifest.txt are kept.
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
    std::ifstream is(root_ / "manifest.txt");
    std::string line;
    while (std::getline(is, line)) {
      const auto comma = line.rfind(',');
      if (comma == std::string::npos) continue;
      const auto kind = parse_kind(line.substr(comma + 1));
      if (kind) entries_.emplace_back(line.substr(0, comma), *kind);
    }
  }

  const std::filesystem::path& root() const { return root_; }

  template <class Writer>
  std::filesystem::path write(const std::string& name, Kind kind, Writer&& writer) {
    const auto path = root_ / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open '" + path.string() + "' for writing");
    writer(os);
    if (!os) throw ConfigError("write to '" + path.string() + "' failed");
    std::erase_if(entries_, [&](const auto& e) { return e.first == name; });
    entries_.emplace_back(name, kind);
    flush_manifest();
    return path;
  }

  static std::string to_string(Kind k) {
    switch (k) {
      case Kind::config: return "config";
      case Kind::model: return "model";
      case Kind::embedding: return "embedding";
      case Kind::loss: return "loss";
      case Kind::samples: return "samples";
      case Kind::samples_manifest: return "samples_manifest";
      case Kind::ledger: return "ledger";
      case Kind::report: return "report";
    }
    return "?";
  }

  static std::optional<Kind> parse_kind(const std::string& s) {
    for (auto k : {Kind::config, Kind::model, Kind::embedding, Kind::loss, Kind::samples,
                   Kind::samples_manifest, Kind::ledger, Kind::report}) {
      if (to_string(k) == s) return k;
    }
    return std::nullopt;
  }

  const std::vector<std::pair<std::string, Kind>>& entries() const { return entries_; }

 private:
  void flush_manifest() const {
    std::ofstream os(root_ / "manifest.txt");
    for (const auto& [name, kind] : entries_) os << name << ',' << to_string(kind) << '\n';
  }

  std::filesystem::path root_;
  std::vector<std::pair<std::string, Kind>> entries_;
};

// --- stages ---------------------------------------------------------------

// A generator spec if it parses as one, otherwise a dataset file.
inline Dataset load_or_generate(const RunConfig& cfg) {
  return run_stage("data", [&] {
    try {
      const auto spec = parse_toy_spec(cfg.data);
      return gen_toy_dataset(spec, cfg.n_data, stream_seed(cfg, Stream::data));
    } catch (const ConfigError&) {
      if (!std::filesystem::exists(cfg.data)) throw;
    }
    return load_dataset(cfg.data);
  });
}

inline scoremodel::EmbeddingMatrix make_embedding(const RunConfig& cfg, std::size_t n_classes) {
  return scoremodel::EmbeddingMatrix::random(n_classes, cfg.embed_dim, stream_seed(cfg, Stream::embedding));
}

inline scoremodel::MLPSpec model_spec(const RunConfig& cfg, std::size_t feature_dim) {
  const std::size_t d = feature_dim + cfg.embed_dim;
  return {d, cfg.hidden, cfg.activation, d, stream_seed(cfg, Stream::model)};
}

inline training::TrainResult train_stage(const RunConfig& cfg, const Dataset& train,
                                         const scoremodel::EmbeddingMatrix& E,
                                         const training::TrainHooks& hooks = {}) {
  return run_stage("train", [&] {
    auto tc = cfg.train;
    tc.seed = stream_seed(cfg, Stream::training);
    return training::train(train, E, model_spec(cfg, train.dim), tc, hooks);
  });
}

struct Generated {
  Dataset data;  // unembedded features and labels
  sampler::AcceptStats stats;
};

inline Generated sample_stage(const RunConfig& cfg, const scoremodel::Params& params,
                              const scoremodel::EmbeddingMatrix& E, std::size_t n_classes) {
  return run_stage("sample", [&] {
    require_dims(params.spec.input_dim > E.embed_dim(), "sample: model is narrower than the embedding");
    auto sc = cfg.sampler;
    sc.seed = stream_seed(cfg, Stream::sampling);
    const std::size_t dim = params.spec.input_dim;
    const auto chains = sampler::run_chains(sampler::NetworkScore{&params}, dim, cfg.n_generate, sc,
                                            {}, cfg.threads);
    Generated g;
    g.data.name = "generated";
    g.data.dim = dim - E.embed_dim();
    g.data.n_classes = n_classes;
    for (const auto& c : chains) {
      const auto un = scoremodel::unembed(c.u, E);
      g.data.features.insert(g.data.features.end(), un.x.begin(), un.x.end());
      g.data.labels.push_back(std::min(un.y, n_classes - 1));
      g.stats.proposals += c.stats.proposals;
      g.stats.accepted += c.stats.accepted;
      g.stats.estimator_failures += c.stats.estimator_failures;
    }
    g.data.fit_range();
    return g;
  });
}

struct EvalOptions {
  ClassifierConfig classifier;
  std::optional<double> bandwidth;
};

// Downstream accuracy (train on generated, test on real) and MMD between
// generated and real features. `real_train`, if given, adds the
// real-data baseline.
inline EvalReport evaluate(const Dataset& generated, const Dataset& real_test,
                           const privacy::PrivacyLedger& ledger, const EvalOptions& opt = {},
                           const Dataset* real_train = nullptr) {
  return run_stage("evaluate", [&] {
    require_dims(generated.dim == real_test.dim, "generated and real data have different dimensions");
    EvalReport r;
    r.dataset = real_test.name;
    r.epsilon = ledger.epsilon();
    r.delta = ledger.delta();
    r.mechanism_invocations = ledger.mechanism_invocations();
    r.n_generated = generated.size();
    r.n_test = real_test.size();
    r.class_counts = generated.class_counts();
    r.class_counts.resize(std::max(generated.n_classes, real_test.n_classes), 0);
    std::size_t present = 0;
    for (auto c : r.class_counts) present += c > 0 ? 1 : 0;
    if (present >= 2) {
      r.downstream_accuracy = accuracy(train_classifier(generated, opt.classifier), real_test);
    } else {
      r.downstream_accuracy = real_test.size() == 0 ? 0.0 : [&] {
        // Every generated label is the same class: the fitted rule is constant.
        const std::size_t only = generated.labels.empty() ? 0 : generated.labels.front();
        std::size_t hit = 0;
        for (auto y : real_test.labels) hit += y == only ? 1 : 0;
        return static_cast<double>(hit) / static_cast<double>(real_test.size());
      }();
    }
    if (real_train) r.baseline_accuracy = accuracy(train_classifier(*real_train, opt.classifier), real_test);
    const Sample a{generated.features, generated.dim};
    const Sample b{real_test.features, real_test.dim};
    r.bandwidth = opt.bandwidth ? *opt.bandwidth : median_bandwidth(a, b);
    r.mmd2_raw = mmd2_rbf(a, b, r.bandwidth);
    r.mmd2 = std::max(0.0, r.mmd2_raw);
    return r;
  });
}

struct PipelineResult {
  EvalReport report;
  scoremodel::Params params;
  scoremodel::EmbeddingMatrix embedding;
  privacy::PrivacyLedger ledger;
  std::vector<double> loss_trace;
  Generated generated;
};

inline void write_loss_csv(std::ostream& os, const std::vector<double>& trace) {
  os << "iteration,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) os << (i + 1) << ',' << detail::fmt(trace[i]) << '\n';
}

inline Tensor embedding_tensor(const scoremodel::EmbeddingMatrix& E) {
  return {{E.n_classes(), E.embed_dim()}, E.values()};
}

inline scoremodel::EmbeddingMatrix embedding_from_tensor(const Tensor& t) {
  if (t.dims.size() != 2) throw FormatError("embedding: expected a 2-D tensor");
  return scoremodel::EmbeddingMatrix(t.dims[0], t.dims[1], t.values);
}

inline void write_samples(OutputDir& out, const Dataset& gen) {
  out.write("samples.bin", OutputDir::Kind::samples, [&](std::ostream& os) {
    write_tensor(os, Tensor{{gen.size(), gen.dim}, gen.features});
  });
  out.write("samples.manifest.csv", OutputDir::Kind::samples_manifest, [&](std::ostream& os) {
    os << "chain,index,label\n";
    // One sample per chain: its final state.
    for (std::size_t i = 0; i < gen.size(); ++i) os << i << ",0," << gen.labels[i] << '\n';
  });
}

// train -> sample -> unembed -> classifier + MMD against the held-out split.
// Writes artifacts when cfg.output is set.
inline PipelineResult run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  const Dataset all = load_or_generate(cfg);
  const auto [real_train, real_test] =
      run_stage("data", [&] { return split_dataset(all, cfg.test_fraction, stream_seed(cfg, Stream::split)); });
  const auto E = run_stage("embed", [&] { return make_embedding(cfg, all.n_classes); });

  auto trained = train_stage(cfg, real_train, E);
  auto ledger = trained.ledger;
  auto generated = sample_stage(cfg, trained.params, E, all.n_classes);
  ledger.register_post_processing("sampling");
  ledger.register_post_processing("unembedding");
  ledger.register_post_processing("evaluation");

  EvalOptions opt;
  opt.classifier.epochs = cfg.classifier_epochs;
  opt.classifier.learning_rate = cfg.classifier_lr;
  auto report = evaluate(generated.data, real_test, ledger, opt, &real_train);
  report.config_hash = config_hash(cfg);
  report.dataset = all.name;
  report.seed = cfg.seed;
  report.k = cfg.train.rr.k;
  if (generated.stats.proposals > 0 && cfg.sampler.metropolis != sampler::MetropolisMode::off) {
    report.accept_rate = static_cast<double>(generated.stats.accepted) /
                         static_cast<double>(generated.stats.proposals);
  }
  report.estimator_failures = generated.stats.estimator_failures;

  if (!cfg.output.empty()) {
    OutputDir out(cfg.output);
    out.write("config.txt", OutputDir::Kind::config, [&](std::ostream& os) { os << dump(cfg); });
    out.write("model.dppm", OutputDir::Kind::model,
              [&](std::ostream& os) { scoremodel::write_params(os, trained.params); });
    out.write("embedding.bin", OutputDir::Kind::embedding,
              [&](std::ostream& os) { write_tensor(os, embedding_tensor(E)); });
    out.write("loss.csv", OutputDir::Kind::loss, [&](std::ostream& os) { write_loss_csv(os, trained.loss_trace); });
    write_samples(out, generated.data);
    out.write("ledger.txt", OutputDir::Kind::ledger, [&](std::ostream& os) { os << ledger_text(ledger); });
    out.write("report.txt", OutputDir::Kind::report, [&](std::ostream& os) { os << report.to_key_values(); });
    out.write("report.csv", OutputDir::Kind::report,
              [&](std::ostream& os) { os << report.csv_header() << '\n' << report.csv_row() << '\n'; });
  }
  return {std::move(report), std::move(trained.params), E, std::move(ledger),
          std::move(trained.loss_trace), std::move(generated)};
}

}  // namespace dppm::harness
