// Copyright 2026 The tsavg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TSAVG_TSAVG_HPP
#define TSAVG_TSAVG_HPP

#include "tsavg/algorithms.hpp"
#include "tsavg/analysis.hpp"
#include "tsavg/core.hpp"
#include "tsavg/dynamics.hpp"
#include "tsavg/experiment.hpp"
#include "tsavg/linalg.hpp"
#include "tsavg/problem_io.hpp"
#include "tsavg/problems.hpp"
#include "tsavg/rng.hpp"
#include "tsavg/suites.hpp"
#include "tsavg/svg.hpp"
#include "tsavg/trajectory.hpp"
#include "tsavg/transforms.hpp"

#endif  // TSAVG_TSAVG_HPP
