/*
 * Copyright 2026 The carleman-rl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string>

#include "carleman/plant.hpp"

namespace carleman {

enum class NoiseKind { none, sinusoids, pulse };

/// Exploration signal description. `sinusoids` sums `components` sines per
/// channel with seeded frequencies in [freq_min, freq_max] (rad/s) and
/// phases; `pulse` alternates +amplitude / -amplitude every `period` seconds
/// with a seeded per-channel start sign and an offset on a `quantum` grid.
/// A nonzero `jitter` in [0, 1) moves each switch by a seeded amount of up to
/// +-jitter * period / 2, which breaks the periodicity of the data; `ramp`
/// replaces each jump by a half-cosine transition of that width (s).
struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double amplitude = 0.1;
  int components = 5;
  double freq_min = 0.5;
  double freq_max = 10.0;
  double period = 3.0;
  double quantum = 0.1;
  double jitter = 0.0;
  double ramp = 0.0;
  std::uint64_t seed = 1;
};

NoiseSignal make_noise(const NoiseSpec& spec, int channels);

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

}  // namespace carleman
