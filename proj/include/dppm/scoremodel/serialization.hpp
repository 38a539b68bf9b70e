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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include "dppm/binary_io.hpp"
#include "dppm/errors.hpp"
#include "dppm/scoremodel/mlp.hpp"

namespace dppm::scoremodel {

inline constexpr std::uint32_t kParamsFormatVersion = 1;

// Layout (all little-endian):
//   "DPPM" | u32 version | u32 input_dim | u32 output_dim | u32 n_hidden |
//   u32 hidden[n_hidden] | u32 activation | u64 seed |
//   per layer: f32 weights[rows * cols] (row-major), f32 bias[rows]
inline void write_params(std::ostream& os, const Params& p) {
  p.validate();
  binary::write_magic(os);
  binary::write_u32(os, kParamsFormatVersion);
  binary::write_u32(os, static_cast<std::uint32_t>(p.spec.input_dim));
  binary::write_u32(os, static_cast<std::uint32_t>(p.spec.output_dim));
  binary::write_u32(os, static_cast<std::uint32_t>(p.spec.hidden_dims.size()));
  for (auto h : p.spec.hidden_dims) binary::write_u32(os, static_cast<std::uint32_t>(h));
  binary::write_u32(os, static_cast<std::uint32_t>(p.spec.activation));
  binary::write_u64(os, p.spec.seed);
  for (double v : p.values) binary::write_f32(os, v);
  if (!os) throw FormatError("write_params: stream failure");
}

inline Params read_params(std::istream& is) {
  binary::expect_magic(is);
  const auto version = binary::read_u32(is);
  if (version != kParamsFormatVersion) {
    throw FormatError("read_params: unsupported format version " + std::to_string(version));
  }
  MLPSpec spec;
  spec.input_dim = binary::read_u32(is);
  spec.output_dim = binary::read_u32(is);
  const auto n_hidden = binary::read_u32(is);
  if (n_hidden > 1024) throw FormatError("read_params: implausible layer count");
  for (std::uint32_t i = 0; i < n_hidden; ++i) spec.hidden_dims.push_back(binary::read_u32(is));
  const auto act = binary::read_u32(is);
  if (act > 1) throw FormatError("read_params: unknown activation tag");
  spec.activation = static_cast<Activation>(act);
  spec.seed = binary::read_u64(is);
  spec.validate();
  Params p{spec, std::vector<double>(parameter_count(spec))};
  for (auto& v : p.values) v = binary::read_f32(is);
  p.validate();
  return p;
}

inline void save_params(const std::filesystem::path& path, const Params& p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_params(os, p);
}

inline Params load_params(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_params(is);
}

}  // namespace dppm::scoremodel
