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

// Minimal automatic differentiation: tape-based reverse mode, dual-number
// forward mode, and their composition for vector-Jacobian-vector terms.

#include "dppm/diffkit/derivatives.hpp"
#include "dppm/diffkit/dual.hpp"
#include "dppm/diffkit/primitives.hpp"
#include "dppm/diffkit/tape.hpp"
