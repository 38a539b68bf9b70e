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
#include <string>
#include <utility>
#include <vector>

namespace dppm::privacy {

// Pure-ε accounting for one training run. Each example's projection vector
// is randomized once per draw over disjoint per-example inputs, so by parallel
// composition the run's budget is the configured ε however many times the
// mechanism fires. Anything computed from the trained network afterwards is
// post-processing and leaves the budget untouched. δ is always 0.
//
// Single writer: the trainer records invocations; post-processing stages
// only register themselves.
class PrivacyLedger {
 public:
  PrivacyLedger() = default;
  explicit PrivacyLedger(double epsilon) : epsilon_(epsilon) {}

  void record_invocations(std::size_t n) { invocations_ += n; }
  void register_post_processing(std::string stage) { post_processing_.push_back(std::move(stage)); }

  double epsilon() const { return epsilon_; }
  double delta() const { return 0.0; }
  std::size_t mechanism_invocations() const { return invocations_; }
  const std::vector<std::string>& post_processing() const { return post_processing_; }

 private:
  double epsilon_ = 0.0;
  std::size_t invocations_ = 0;
  std::vector<std::string> post_processing_;
};

struct BudgetReport {
  double epsilon = 0.0;
  double delta = 0.0;
};

inline BudgetReport ledger_report(const PrivacyLedger& ledger) {
  return {ledger.epsilon(), ledger.delta()};
}

}  // namespace dppm::privacy
