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

#include "carleman/noise.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace carleman {

namespace {

// Uniform value in [0, 1) from a (key, index) pair via the splitmix64 finalizer.
double unit_hash(std::uint64_t key, long index) {
  std::uint64_t z = key + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(index);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

}  // namespace

NoiseSignal make_noise(const NoiseSpec& spec, int channels) {
  detail::require(channels >= 1, "make_noise: need at least one channel");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double a = spec.amplitude;

  switch (spec.kind) {
    case NoiseKind::none:
      return {};
    case NoiseKind::sinusoids: {
      detail::require(spec.components >= 1, "sinusoid noise needs at least one component");
      detail::require(spec.freq_min > 0.0 && spec.freq_max >= spec.freq_min, "sinusoid noise: bad frequency range");
      const int m = spec.components;
      Eigen::MatrixXd freq(channels, m), phase(channels, m);
      for (int c = 0; c < channels; ++c) {
        for (int j = 0; j < m; ++j) {
          freq(c, j) = spec.freq_min + (spec.freq_max - spec.freq_min) * unit(rng);
          phase(c, j) = 2.0 * std::numbers::pi * unit(rng);
        }
      }
      return [=](double t) {
        Eigen::VectorXd w(channels);
        for (int c = 0; c < channels; ++c) {
          double s = 0.0;
          for (int j = 0; j < m; ++j) s += std::sin(freq(c, j) * t + phase(c, j));
          w(c) = a * s;
        }
        return w;
      };
    }
    case NoiseKind::pulse: {
      detail::require(spec.period > 0.0 && spec.quantum > 0.0, "pulse noise: period and quantum must be positive");
      detail::require(spec.jitter >= 0.0 && spec.jitter < 1.0, "pulse noise: jitter must lie in [0, 1)");
      detail::require(spec.ramp >= 0.0 && spec.ramp < spec.period * (1.0 - spec.jitter),
                      "pulse noise: ramp must be shorter than the minimum switch spacing");
      const long slots = std::max(1L, std::lround(spec.period / spec.quantum));
      Eigen::VectorXd offset(channels), sign(channels);
      std::vector<std::uint64_t> keys(static_cast<std::size_t>(channels));
      for (int c = 0; c < channels; ++c) {
        offset(c) = spec.quantum * static_cast<double>(std::uniform_int_distribution<long>(0, slots - 1)(rng));
        sign(c) = unit(rng) < 0.5 ? -1.0 : 1.0;
        keys[static_cast<std::size_t>(c)] = rng();
      }
      const double period = spec.period;
      const double jitter = spec.jitter;
      const double ramp = spec.ramp;
      // Switch j of channel c sits at j * period - offset, displaced by a
      // hash of (channel key, j) so the signal needs no stored horizon.
      auto switch_time = [=](int c, long j) {
        const double base = static_cast<double>(j) * period - offset(c);
        if (jitter == 0.0) return base;
        return base + jitter * period * (unit_hash(keys[static_cast<std::size_t>(c)], j) - 0.5);
      };
      return [=](double t) {
        Eigen::VectorXd w(channels);
        for (int c = 0; c < channels; ++c) {
          // Index of the last switch at or before t. The small bias keeps
          // samples that land exactly on an unjittered switch instant in the
          // new half-period regardless of rounding in t.
          long j = static_cast<long>(std::floor((t + offset(c)) / period + 1e-9));
          while (switch_time(c, j + 1) <= t + 1e-9 * period) ++j;
          while (switch_time(c, j) > t + 1e-9 * period) --j;
          const double level = (j % 2 == 0 ? a : -a) * sign(c);
          double value = level;
          if (ramp > 0.0) {
            const double since = t - switch_time(c, j);
            const double until = switch_time(c, j + 1) - t;
            // Blend across the switch nearest to t: from -level to level after
            // switch j, and from level toward -level before switch j + 1.
            if (since < 0.5 * ramp) {
              value = -level + level * (1.0 - std::cos(std::numbers::pi * (0.5 + since / ramp)));
            } else if (until < 0.5 * ramp) {
              value = level - level * (1.0 - std::cos(std::numbers::pi * (0.5 - until / ramp)));
            }
          }
          w(c) = value;
        }
        return w;
      };
    }
  }
  return {};
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none:
      return "none";
    case NoiseKind::sinusoids:
      return "sum-of-sinusoids";
    case NoiseKind::pulse:
      return "alternating-pulse";
  }
  return "none";
}

NoiseKind noise_kind_from_string(const std::string& name) {
  if (name == "none") return NoiseKind::none;
  if (name == "sum-of-sinusoids") return NoiseKind::sinusoids;
  if (name == "alternating-pulse") return NoiseKind::pulse;
  throw InvalidArgument("unknown noise kind '" + name + "'");
}

}  // namespace carleman
