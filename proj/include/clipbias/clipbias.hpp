/*
 * Copyright 2026 The clipbias Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "clipbias/diagnostics.hpp"
#include "clipbias/error.hpp"
#include "clipbias/monte_carlo.hpp"
#include "clipbias/noise_models.hpp"
#include "clipbias/optimizers.hpp"
#include "clipbias/privacy.hpp"
#include "clipbias/probes.hpp"
#include "clipbias/problems.hpp"
#include "clipbias/random.hpp"
#include "clipbias/special.hpp"
#include "clipbias/vec_core.hpp"
#include "clipbias/wasserstein.hpp"
