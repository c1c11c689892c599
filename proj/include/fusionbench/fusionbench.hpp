// Copyright 2026 The fusionbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "fusionbench/data.hpp"
#include "fusionbench/encoders.hpp"
#include "fusionbench/error.hpp"
#include "fusionbench/fusion.hpp"
#include "fusionbench/gradcheck.hpp"
#include "fusionbench/init.hpp"
#include "fusionbench/linalg.hpp"
#include "fusionbench/metrics.hpp"
#include "fusionbench/models.hpp"
#include "fusionbench/ops.hpp"
#include "fusionbench/optim.hpp"
#include "fusionbench/tape.hpp"
#include "fusionbench/tensor.hpp"
#include "fusionbench/train.hpp"
