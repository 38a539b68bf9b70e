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
#include <stdexcept>
#include <string>

namespace dppm {

// Root of the library's exception hierarchy. The CLI maps the two direct
// subclasses onto its exit codes (ConfigError -> 1, NumericalError -> 2).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration, bad arguments, dimension mismatches, malformed files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class FormatError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// A computation produced a NaN or an infinity.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Training loss became non-finite at `iteration` (1-indexed).
class TrainingDivergence : public NumericalError {
 public:
  TrainingDivergence(std::size_t iteration, const std::string& what)
      : NumericalError("training diverged at iteration " +
                       std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}

  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

// Hamiltonian trajectory left the finite range at outer iteration m, leapfrog
// step n (both 1-indexed).
class SamplerDivergence : public NumericalError {
 public:
  SamplerDivergence(std::size_t m, std::size_t n)
      : NumericalError("sampler diverged at outer iteration " +
                       std::to_string(m) + ", leapfrog step " +
                       std::to_string(n)),
        m_(m),
        n_(n) {}

  std::size_t outer_iteration() const { return m_; }
  std::size_t leapfrog_step() const { return n_; }

 private:
  std::size_t m_;
  std::size_t n_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

inline void require_dims(bool condition, const std::string& message) {
  if (!condition) throw DimensionError(message);
}

}  // namespace dppm
