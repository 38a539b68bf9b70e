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

#include "dppm/harness/classifier.hpp"
#include "dppm/harness/config.hpp"
#include "dppm/harness/datasets.hpp"
#include "dppm/harness/io.hpp"
#include "dppm/harness/mmd.hpp"
#include "dppm/harness/pipeline.hpp"
