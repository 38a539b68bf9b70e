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
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dppm/harness.hpp"

using namespace dppm;
using namespace dppm::harness;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("dppm_test_" + name);
  fs::remove_all(p);
  return p;
}

TEST(ToyData, Gauss2dCovarianceNearIdentity) {
  const auto d = gen_toy_dataset("gauss2d", 10000, 1);
  ASSERT_EQ(d.dim, 2u);
  EXPECT_EQ(d.n_classes, 1u);
  double m[2] = {0, 0}, c[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (int a = 0; a < 2; ++a) m[a] += d.row(i)[a];
  }
  for (auto& v : m) v /= static_cast<double>(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) c[a][b] += (d.row(i)[a] - m[a]) * (d.row(i)[b] - m[b]);
    }
  }
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      EXPECT_NEAR(c[a][b] / static_cast<double>(d.size() - 1), a == b ? 1.0 : 0.0, 0.1);
    }
  }
}

TEST(ToyData, Mixture2ClassMeans) {
  const auto d = gen_toy_dataset("mixture2(6)", 10000, 2);
  ASSERT_EQ(d.n_classes, 2u);
  double sum[2][2] = {{0, 0}, {0, 0}};
  const auto counts = d.class_counts();
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (int a = 0; a < 2; ++a) sum[d.labels[i]][a] += d.row(i)[a];
  }
  for (std::size_t y = 0; y < 2; ++y) {
    const double sign = y == 0 ? -1.0 : 1.0;
    EXPECT_NEAR(sum[y][0] / static_cast<double>(counts[y]), sign * 3.0, 0.1);
    EXPECT_NEAR(sum[y][1] / static_cast<double>(counts[y]), 0.0, 0.1);
  }
  EXPECT_EQ(d.name, "mixture2(6)");
}

TEST(ToyData, GridDigitsInUnitRange) {
  const auto d = gen_toy_dataset("grid_digits", 500, 3);
  EXPECT_EQ(d.dim, 64u);
  EXPECT_EQ(d.n_classes, 10u);
  for (double x : d.features) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
  for (auto c : d.class_counts()) EXPECT_EQ(c, 50u);
  d.validate();
}

TEST(ToyData, RingsRadii) {
  const auto d = gen_toy_dataset("rings", 2000, 4);
  double r[2] = {0, 0};
  for (std::size_t i = 0; i < d.size(); ++i) r[d.labels[i]] += std::hypot(d.row(i)[0], d.row(i)[1]);
  EXPECT_NEAR(r[0] / 1000.0, 1.0, 0.05);
  EXPECT_NEAR(r[1] / 1000.0, 3.0, 0.05);
}

TEST(ToyData, UnknownSpec) {
  EXPECT_THROW(gen_toy_dataset("spiral", 100, 0), ConfigError);
  EXPECT_THROW(parse_toy_spec("mixture2(-1)"), ConfigError);
  EXPECT_THROW(parse_toy_spec("mixture2(abc)"), ConfigError);
}

TEST(ToyData, DeterministicInSeed) {
  EXPECT_EQ(gen_toy_dataset("mixture2(4)", 300, 9).features, gen_toy_dataset("mixture2(4)", 300, 9).features);
  EXPECT_NE(gen_toy_dataset("mixture2(4)", 300, 9).features, gen_toy_dataset("mixture2(4)", 300, 10).features);
}

TEST(Split, SizesAndDisjointness) {
  const auto d = gen_toy_dataset("gauss2d", 1000, 5);
  const auto [train, test] = split_dataset(d, 0.25, 7);
  EXPECT_EQ(test.size(), 250u);
  EXPECT_EQ(train.size(), 750u);
  std::multiset<double> all(d.features.begin(), d.features.end());
  std::multiset<double> both(train.features.begin(), train.features.end());
  both.insert(test.features.begin(), test.features.end());
  EXPECT_EQ(all, both);
  EXPECT_THROW(split_dataset(d, 1.0, 7), ConfigError);
}

TEST(Classifier, SeparatesMixture) {
  const auto train = gen_toy_dataset("mixture2(6)", 2000, 11);
  const auto test = gen_toy_dataset("mixture2(6)", 2000, 12);
  EXPECT_GE(accuracy(train_classifier(train), test), 0.95);
}

TEST(Classifier, ShuffledLabelsAtChance) {
  auto train = gen_toy_dataset("mixture2(6)", 2000, 13);
  auto test = gen_toy_dataset("mixture2(6)", 4000, 14);
  Rng rng(15);
  std::shuffle(train.labels.begin(), train.labels.end(), rng.engine());
  std::shuffle(test.labels.begin(), test.labels.end(), rng.engine());
  EXPECT_NEAR(accuracy(train_classifier(train), test), 0.5, 0.05);
}

TEST(Classifier, Deterministic) {
  const auto train = gen_toy_dataset("rings", 600, 16);
  const auto a = train_classifier(train), b = train_classifier(train);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.bias, b.bias);
}

TEST(Classifier, NeedsTwoClasses) {
  auto d = gen_toy_dataset("mixture2(6)", 100, 17);
  for (auto& y : d.labels) y = 1;
  EXPECT_THROW(train_classifier(d), ConfigError);
}

TEST(Accuracy, PerfectAndConstantPredictors) {
  const auto test = gen_toy_dataset("mixture2(6)", 1000, 18);
  auto truth = [&](std::span<const double> x) -> std::size_t {
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (test.row(i).data() == x.data()) return test.labels[i];
    }
    return 99;
  };
  EXPECT_EQ(accuracy(truth, test), 1.0);
  EXPECT_EQ(accuracy([](std::span<const double>) { return std::size_t{0}; }, test), 0.5);
}

std::vector<double> gaussian_cloud(std::size_t n, double shift, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    v[2 * i] = shift + rng.normal();
    v[2 * i + 1] = rng.normal();
  }
  return v;
}

TEST(Mmd, IdenticalSamplesBiasedIsZero) {
  const auto a = gaussian_cloud(300, 0.0, 1);
  EXPECT_NEAR(mmd2_rbf(a, a, 2, 1.0, MmdEstimator::biased), 0.0, 1e-12);
}

TEST(Mmd, SeparatedCloudsAreFar) {
  const auto a = gaussian_cloud(1000, 0.0, 2), b = gaussian_cloud(1000, 5.0, 3);
  EXPECT_GT(mmd2_rbf(a, b, 2), 0.5);
}

TEST(Mmd, SameDistributionNearZero) {
  const auto a = gaussian_cloud(1000, 0.0, 4), b = gaussian_cloud(1000, 0.0, 5);
  EXPECT_LT(std::abs(mmd2_rbf(a, b, 2)), 0.01);
}

TEST(Mmd, Symmetric) {
  const auto a = gaussian_cloud(200, 0.0, 6), b = gaussian_cloud(300, 1.0, 7);
  EXPECT_NEAR(mmd2_rbf(a, b, 2, 1.3), mmd2_rbf(b, a, 2, 1.3), 1e-12);
}

// Direct evaluation of the unbiased estimator on a 1-D hand example.
TEST(Mmd, HandComputedUnbiased) {
  const std::vector<double> a{0.0, 1.0}, b{0.0, 2.0};
  const double k1 = std::exp(-0.5), k2 = std::exp(-2.0);
  const double expected = k1 + k2 - 2.0 * (1.0 + k2 + k1 + k1) / 4.0;
  EXPECT_NEAR(mmd2_rbf(a, b, 1, 1.0), expected, 1e-15);
}

TEST(Mmd, DimensionMismatch) {
  const std::vector<double> a{0, 1, 2, 3};
  EXPECT_THROW(mmd2_rbf(Sample{a, 2}, Sample{a, 1}), DimensionError);
}

TEST(Config, ParsesKeyValueText) {
  std::istringstream is("# comment\n\nepsilon = 2.5\nk=4\n  data = gauss2d  \n");
  const auto kv = parse_key_values(is, "test");
  EXPECT_EQ(kv.at("epsilon"), "2.5");
  EXPECT_EQ(kv.at("k"), "4");
  EXPECT_EQ(kv.at("data"), "gauss2d");
  std::istringstream bad("epsilon 2\n");
  EXPECT_THROW(parse_key_values(bad, "bad"), ConfigError);
}

TEST(Config, OverridesBeatFileBeatDefaults) {
  const RunConfig defaults;
  const auto cfg = make_run_config({{"epsilon", "3"}, {"k", "6"}}, {"k=7"});
  EXPECT_EQ(cfg.train.rr.epsilon, 3.0);
  EXPECT_EQ(cfg.train.rr.k, 7u);
  EXPECT_EQ(cfg.seed, defaults.seed);
  EXPECT_EQ(cfg.n_generate, 2000u);
}

TEST(Config, UnknownKeyAndBadValues) {
  EXPECT_THROW(make_run_config({{"epsilom", "1"}}), ConfigError);
  EXPECT_THROW(make_run_config({}, {"k=1"}), ConfigError);
  EXPECT_THROW(make_run_config({}, {"epsilon=abc"}), ConfigError);
  EXPECT_THROW(make_run_config({}, {"noequals"}), ConfigError);
}

TEST(Config, HashIgnoresOutputAndThreads) {
  const auto a = make_run_config({}, {"output=/tmp/a", "threads=1"});
  const auto b = make_run_config({}, {"output=/tmp/b", "threads=4"});
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  EXPECT_NE(config_hash(a), config_hash(make_run_config({}, {"epsilon=2"})));
}

TEST(Config, DumpReadsBack) {
  const auto cfg = make_run_config({}, {"epsilon=0.3", "hidden=32,16", "kinetic=rayleigh"});
  std::istringstream is(dump(cfg));
  const auto again = make_run_config(parse_key_values(is, "dump"));
  EXPECT_EQ(canonical(again), canonical(cfg));
}

TEST(Config, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Io, TensorRoundTrip) {
  const Tensor t{{2, 3}, {0.5, -1.0, 2.25, 3.0, 0.0, -7.5}};
  std::stringstream ss;
  write_tensor(ss, t);
  EXPECT_EQ(ss.str().size(), 4u + 4 + 4 + 2 * 4 + 6 * 4);
  const auto back = read_tensor(ss);
  EXPECT_EQ(back.dims, t.dims);
  EXPECT_EQ(back.values, t.values);
}

TEST(Io, TensorRejectsTruncationAndTrailingBytes) {
  std::stringstream ss;
  write_tensor(ss, Tensor{{3}, {1, 2, 3}});
  const auto bytes = ss.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(read_tensor(cut), FormatError);
  std::stringstream extra(bytes + "x");
  EXPECT_THROW(read_tensor(extra), FormatError);
}

TEST(Io, CsvRoundTrip) {
  const auto d = gen_toy_dataset("rings", 50, 21);
  std::stringstream ss;
  write_csv_dataset(ss, d);
  const auto back = read_csv_dataset(ss, "rings");
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.n_classes, 2u);
}

TEST(Io, CsvErrors) {
  std::istringstream no_label("x0,x1\n1,2\n");
  EXPECT_THROW(read_csv_dataset(no_label, "a"), FormatError);
  std::istringstream ragged("x0,label\n1,0\n2\n");
  EXPECT_THROW(read_csv_dataset(ragged, "b"), FormatError);
  std::istringstream nan_cell("x0,label\nnan,0\n");
  EXPECT_THROW(read_csv_dataset(nan_cell, "c"), ConfigError);
}

TEST(Io, TensorDatasetWithManifest) {
  const auto dir = scratch_dir("tensor_dataset");
  fs::create_directories(dir);
  const auto d = gen_toy_dataset("mixture2(6)", 40, 22);
  save_tensor(dir / "data.bin", Tensor{{d.size(), d.dim}, d.features});
  {
    std::ofstream ms(manifest_path(dir / "data.bin"));
    ms << "index,label\n";
    for (std::size_t i = 0; i < d.size(); ++i) ms << i << ',' << d.labels[i] << '\n';
  }
  const auto back = load_dataset(dir / "data.bin");
  EXPECT_EQ(back.labels, d.labels);
  ASSERT_EQ(back.features.size(), d.features.size());
  for (std::size_t i = 0; i < d.features.size(); ++i) {
    EXPECT_EQ(back.features[i], static_cast<double>(static_cast<float>(d.features[i])));
  }
  fs::remove_all(dir);
}

TEST(LedgerFile, RoundTrip) {
  privacy::PrivacyLedger ledger(2.5);
  ledger.record_invocations(1234);
  ledger.register_post_processing("sampling");
  ledger.register_post_processing("evaluation");
  std::istringstream is(ledger_text(ledger));
  const auto back = parse_ledger(is, "ledger");
  EXPECT_EQ(back.epsilon(), 2.5);
  EXPECT_EQ(back.delta(), 0.0);
  EXPECT_EQ(back.mechanism_invocations(), 1234u);
  EXPECT_EQ(back.post_processing(), ledger.post_processing());
}

TEST(LedgerFile, RejectsNonzeroDeltaAndMissingKeys) {
  std::istringstream delta("epsilon=1\ndelta=1e-5\nmechanism_invocations=3\npost_processing=\n");
  EXPECT_THROW(parse_ledger(delta, "l"), FormatError);
  std::istringstream missing("epsilon=1\ndelta=0\n");
  EXPECT_THROW(parse_ledger(missing, "l"), FormatError);
}

TEST(EvalReportText, CsvHeaderMatchesRow) {
  EvalReport r;
  r.epsilon = 10.0;
  r.class_counts = {3, 4};
  const auto header = r.csv_header(), row = r.csv_row();
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  EXPECT_NE(r.to_key_values().find("class_counts=3;4\n"), std::string::npos);
  EXPECT_NE(r.to_key_values().find("delta=0\n"), std::string::npos);
}

TEST(OutputDirTest, ManifestListsEveryFile) {
  const auto dir = scratch_dir("outdir");
  {
    OutputDir out(dir);
    out.write("a.txt", OutputDir::Kind::config, [](std::ostream& os) { os << "x"; });
    out.write("b.bin", OutputDir::Kind::model, [](std::ostream& os) { os << "y"; });
    out.write("a.txt", OutputDir::Kind::config, [](std::ostream& os) { os << "z"; });
  }
  EXPECT_EQ(slurp(dir / "manifest.txt"), "b.bin,model\na.txt,config\n");
  OutputDir again(dir);
  EXPECT_EQ(again.entries().size(), 2u);
  fs::remove_all(dir);
}

TEST(Evaluate, ReportCarriesLedgerBudget) {
  const auto real = gen_toy_dataset("mixture2(6)", 400, 30);
  const auto gen = gen_toy_dataset("mixture2(6)", 400, 31);
  privacy::PrivacyLedger ledger(7.0);
  ledger.record_invocations(10);
  const auto r = evaluate(gen, real, ledger, {}, &real);
  EXPECT_EQ(r.epsilon, 7.0);
  EXPECT_EQ(r.delta, 0.0);
  EXPECT_EQ(r.mechanism_invocations, 10u);
  EXPECT_GE(r.downstream_accuracy, 0.95);
  EXPECT_GE(r.baseline_accuracy, 0.95);
  EXPECT_LT(r.mmd2, 0.02);
  EXPECT_EQ(r.class_counts, (std::vector<std::size_t>{200, 200}));
}

TEST(Evaluate, SingleGeneratedClassIsConstantRule) {
  const auto real = gen_toy_dataset("mixture2(6)", 400, 32);
  auto gen = gen_toy_dataset("mixture2(6)", 100, 33);
  for (auto& y : gen.labels) y = 1;
  const auto r = evaluate(gen, real, privacy::PrivacyLedger(1.0));
  EXPECT_EQ(r.downstream_accuracy, 0.5);
}

RunConfig small_config(const std::string& output) {
  std::vector<std::string> o{"data=mixture2(6)", "n_data=400",   "iterations=30", "hidden=8",
                             "n_generate=60",    "N=10",         "M=3",           "epsilon=4",
                             "k=5",              "batch_size=32", "classifier_epochs=50"};
  if (!output.empty()) o.push_back("output=" + output);
  return make_run_config({}, o);
}

TEST(Pipeline, IdenticalConfigsGiveIdenticalArtifacts) {
  const auto d1 = scratch_dir("pipe1"), d2 = scratch_dir("pipe2");
  const auto a = run_pipeline(small_config(d1.string()));
  const auto b = run_pipeline(small_config(d2.string()));
  EXPECT_EQ(a.report.to_key_values(), b.report.to_key_values());
  for (const auto* name : {"report.txt", "report.csv", "ledger.txt", "model.dppm", "samples.bin", "loss.csv"}) {
    EXPECT_EQ(slurp(d1 / name), slurp(d2 / name)) << name;
  }
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST(Pipeline, OutputHoldsNoRawTrainingData) {
  const auto dir = scratch_dir("pipe3");
  const auto cfg = small_config(dir.string());
  run_pipeline(cfg);
  std::set<std::string> listed;
  const OutputDir existing(dir);
  for (const auto& entry : existing.entries()) listed.insert(entry.first);
  for (const auto& f : fs::directory_iterator(dir)) {
    const auto name = f.path().filename().string();
    if (name != "manifest.txt") EXPECT_TRUE(listed.count(name)) << name;
  }
  // No training row appears verbatim in the generated samples.
  const Dataset all = load_or_generate(cfg);
  const auto gen = load_tensor(dir / "samples.bin");
  std::set<double> real_values;
  for (double x : all.features) real_values.insert(static_cast<double>(static_cast<float>(x)));
  std::size_t hits = 0;
  for (double x : gen.values) hits += real_values.count(x);
  EXPECT_LT(hits, gen.values.size() / 10);
  fs::remove_all(dir);
}

TEST(Pipeline, LedgerMatchesConfiguredBudget) {
  for (const char* eps : {"1", "10"}) {
    auto cfg = small_config("");
    cfg.train.rr.epsilon = std::stod(eps);
    const auto r = run_pipeline(cfg);
    EXPECT_EQ(r.report.epsilon, std::stod(eps));
    EXPECT_EQ(r.report.delta, 0.0);
    EXPECT_EQ(r.ledger.epsilon(), std::stod(eps));
    EXPECT_EQ(r.report.mechanism_invocations, 30u * 32u);
    EXPECT_EQ(r.report.n_generated, 60u);
    EXPECT_EQ(r.report.config_hash, config_hash(cfg));
  }
}

TEST(Pipeline, StageErrorsNameTheStage) {
  auto cfg = small_config("");
  cfg.data = "/nonexistent/file.csv";
  try {
    run_pipeline(cfg);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("data: ", 0), 0u) << e.what();
  }
}

}  // namespace
