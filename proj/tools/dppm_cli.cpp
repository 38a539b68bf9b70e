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

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dppm/dppm.hpp"

namespace fs = std::filesystem;
using namespace dppm;
using harness::OutputDir;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitAudit = 3;

harness::RunConfig load_config(const std::string& path, const std::vector<std::string>& sets) {
  const auto kv = path.empty() ? harness::KeyValues{} : harness::load_key_values(path);
  return harness::make_run_config(kv, sets);
}

privacy::PrivacyLedger read_ledger(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("missing privacy ledger '" + path.string() + "'");
  return harness::parse_ledger(is, path.string());
}

fs::path output_root(const std::string& flag, const harness::RunConfig& cfg, const fs::path& fallback) {
  if (!flag.empty()) return flag;
  if (!cfg.output.empty()) return cfg.output;
  return fallback;
}

int cmd_train(const std::string& config, const std::vector<std::string>& sets, const std::string& out_flag) {
  const auto cfg = load_config(config, sets);
  OutputDir out(output_root(out_flag, cfg, "dppm_run"));
  const auto all = harness::load_or_generate(cfg);
  const auto [train, test] = harness::split_dataset(all, cfg.test_fraction,
                                                    harness::stream_seed(cfg, harness::Stream::split));
  const auto E = harness::make_embedding(cfg, all.n_classes);
  training::TrainHooks hooks;
  hooks.on_checkpoint = [&](std::size_t t, const scoremodel::Params& p) {
    out.write("checkpoint_" + std::to_string(t) + ".dppm", OutputDir::Kind::model,
              [&](std::ostream& os) { scoremodel::write_params(os, p); });
  };
  const auto result = harness::train_stage(cfg, train, E, hooks);
  out.write("config.txt", OutputDir::Kind::config, [&](std::ostream& os) { os << harness::dump(cfg); });
  out.write("model.dppm", OutputDir::Kind::model,
            [&](std::ostream& os) { scoremodel::write_params(os, result.params); });
  out.write("embedding.bin", OutputDir::Kind::embedding,
            [&](std::ostream& os) { harness::write_tensor(os, harness::embedding_tensor(E)); });
  out.write("loss.csv", OutputDir::Kind::loss,
            [&](std::ostream& os) { harness::write_loss_csv(os, result.loss_trace); });
  out.write("ledger.txt", OutputDir::Kind::ledger,
            [&](std::ostream& os) { os << harness::ledger_text(result.ledger); });
  std::cout << "model=" << (out.root() / "model.dppm").string() << "\n"
            << "final_loss=" << harness::detail::fmt(result.loss_trace.back()) << "\n"
            << "epsilon=" << harness::detail::fmt(result.ledger.epsilon()) << " delta=0\n";
  return kExitOk;
}

int cmd_sample(const std::string& model, const std::string& config, const std::vector<std::string>& sets,
               const std::string& out_flag) {
  const auto cfg = load_config(config, sets);
  const fs::path model_dir = fs::path(model).parent_path();
  const auto params = scoremodel::load_params(model);
  const auto E = harness::embedding_from_tensor(harness::load_tensor(model_dir / "embedding.bin"));
  auto ledger = read_ledger(model_dir / "ledger.txt");
  const auto gen = harness::sample_stage(cfg, params, E, E.n_classes());
  ledger.register_post_processing("sampling");
  ledger.register_post_processing("unembedding");
  OutputDir out(output_root(out_flag, cfg, model_dir.empty() ? fs::path(".") : model_dir));
  harness::write_samples(out, gen.data);
  out.write("ledger.txt", OutputDir::Kind::ledger, [&](std::ostream& os) { os << harness::ledger_text(ledger); });
  std::cout << "samples=" << (out.root() / "samples.bin").string() << "\n"
            << "n=" << gen.data.size() << "\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& generated, const std::string& real, const std::string& out_flag) {
  const auto gen = harness::load_dataset(generated);
  const auto ref = harness::load_dataset(real);
  const fs::path gen_dir = fs::path(generated).parent_path();
  auto ledger = read_ledger(gen_dir / "ledger.txt");
  ledger.register_post_processing("evaluation");
  auto report = harness::evaluate(gen, ref, ledger);
  report.dataset = ref.name;
  std::ifstream cfg_file(gen_dir / "config.txt");
  if (cfg_file) {
    const auto cfg = harness::make_run_config(harness::parse_key_values(cfg_file, "config.txt"));
    report.config_hash = harness::config_hash(cfg);
    report.seed = cfg.seed;
    report.k = cfg.train.rr.k;
  } else {
    report.config_hash = "unknown";
  }
  OutputDir out(out_flag.empty() ? (gen_dir.empty() ? fs::path(".") : gen_dir) : fs::path(out_flag));
  out.write("report.txt", OutputDir::Kind::report, [&](std::ostream& os) { os << report.to_key_values(); });
  out.write("report.csv", OutputDir::Kind::report,
            [&](std::ostream& os) { os << report.csv_header() << '\n' << report.csv_row() << '\n'; });
  std::cout << report.to_key_values();
  return kExitOk;
}

int cmd_audit(double epsilon, std::size_t k, std::size_t trials, std::uint64_t seed, const std::string& mech) {
  privacy::Mechanism m = privacy::default_mechanism;
  if (mech == "broken") {
    m = privacy::broken_mechanism;
  } else if (mech == "overspent") {
    m = privacy::overspent_mechanism;
  } else if (mech != "rr") {
    throw ConfigError("unknown mechanism '" + mech + "' (expected rr, broken or overspent)");
  }
  Rng rng(seed);
  const auto r = privacy::audit_ratio(privacy::RRConfig{epsilon, k}, trials, rng, m);
  std::cout << r.line() << "\n";
  return r.pass ? kExitOk : kExitAudit;
}

int cmd_gen_data(const std::string& spec, std::size_t n, std::uint64_t seed, const std::string& out_flag) {
  const auto d = harness::gen_toy_dataset(spec, n, seed);
  const fs::path out = out_flag.empty() ? fs::path(harness::parse_toy_spec(spec).kind == harness::ToyKind::mixture2
                                                       ? "mixture2.csv"
                                                       : spec + ".csv")
                                        : fs::path(out_flag);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  if (out.extension() == ".csv") {
    std::ofstream os(out);
    if (!os) throw ConfigError("cannot open '" + out.string() + "' for writing");
    harness::write_csv_dataset(os, d);
  } else {
    harness::save_tensor(out, harness::Tensor{{d.size(), d.dim}, d.features});
    std::ofstream ms(harness::manifest_path(out));
    ms << "index,label\n";
    for (std::size_t i = 0; i < d.size(); ++i) ms << i << ',' << d.labels[i] << '\n';
  }
  std::cout << "wrote " << out.string() << " (" << d.size() << " x " << d.dim << ", " << d.n_classes
            << " classes)\n";
  return kExitOk;
}

int cmd_run(const std::string& config, const std::vector<std::string>& sets) {
  const auto cfg = load_config(config, sets);
  const auto result = harness::run_pipeline(cfg);
  std::cout << result.report.to_key_values();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private probabilistic models: train, sample, evaluate, audit"};
  app.require_subcommand(1);

  std::string config, model, generated, real, out, spec, mech = "rr";
  std::vector<std::string> sets;
  double epsilon = 0.0;
  std::size_t k = 0, trials = 100000, n = 0;
  std::uint64_t seed = 0;

  auto* train = app.add_subcommand("train", "train a score model; writes model.dppm and loss.csv");
  train->add_option("--config", config, "key = value config file")->required();
  train->add_option("--set", sets, "override, key=value (repeatable)");
  train->add_option("--out", out, "output directory (default: config 'output' or ./dppm_run)");

  auto* sample = app.add_subcommand("sample", "draw samples from a trained model");
  sample->add_option("--model", model, "model.dppm written by train")->required();
  sample->add_option("--config", config, "key = value config file")->required();
  sample->add_option("--set", sets, "override, key=value (repeatable)");
  sample->add_option("--out", out, "output directory (default: next to the model)");

  auto* evaluate = app.add_subcommand("evaluate", "classifier accuracy and MMD of generated vs real data");
  evaluate->add_option("--generated", generated, "samples.bin (with manifest and ledger alongside)")->required();
  evaluate->add_option("--real", real, "real dataset (.csv with label column, or tensor + manifest)")->required();
  evaluate->add_option("--out", out, "report directory (default: next to the samples)");

  auto* audit = app.add_subcommand("audit-privacy", "empirical check of the randomized response ratio bound");
  audit->add_option("--epsilon", epsilon, "privacy budget")->required();
  audit->add_option("--k", k, "candidate set size")->required();
  audit->add_option("--trials", trials, "draws per candidate center");
  audit->add_option("--seed", seed, "random seed");
  audit->add_option("--mechanism", mech, "rr (default); broken or overspent are test fixtures");

  auto* gen = app.add_subcommand("gen-data", "write a toy dataset");
  gen->add_option("--spec", spec, "gauss2d | mixture2(<sep>) | rings | grid_digits")->required();
  gen->add_option("--n", n, "number of rows")->required();
  gen->add_option("--seed", seed, "random seed");
  gen->add_option("--out", out, "output path (.csv, or anything else for tensor + manifest)");

  auto* run = app.add_subcommand("run", "train, sample and evaluate in one go");
  run->add_option("--config", config, "key = value config file");
  run->add_option("--set", sets, "override, key=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train) return cmd_train(config, sets, out);
    if (*sample) return cmd_sample(model, config, sets, out);
    if (*evaluate) return cmd_evaluate(generated, real, out);
    if (*audit) return cmd_audit(epsilon, k, trials, seed, mech);
    if (*gen) return cmd_gen_data(spec, n, seed, out);
    if (*run) return cmd_run(config, sets);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
