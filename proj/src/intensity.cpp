/*
 * Copyright 2026 The mia-toolkit Authors.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mia/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mia {
namespace {

Tensor as_floating(const Tensor& t) {
  if (t.dtype() == DType::kFloat32 || t.dtype() == DType::kFloat64) return t;
  return t.astype(DType::kFloat32);
}

}  // namespace

Tensor znormalize(const Tensor& t, bool has_channels) {
  Tensor out = as_floating(t);
  const std::size_t channels = has_channels ? t.shape().back() : 1;
  out.visit([&](auto v) {
    using T = typename decltype(v)::value_type;
    if constexpr (std::is_floating_point_v<T>) {
      const std::size_t n = v.size() / channels;
      for (std::size_t c = 0; c < channels; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += v[i * channels + c];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = v[i * channels + c] - mean;
          var += d * d;
        }
        const double sd = std::sqrt(var / static_cast<double>(n));
        const double scale = sd > 0.0 ? 1.0 / sd : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
          auto& x = v[i * channels + c];
          x = static_cast<T>((x - mean) * scale);
        }
      }
    }
  });
  return out;
}

Tensor rescale_intensity(const Tensor& t, double out_min, double out_max) {
  Tensor out = as_floating(t);
  out.visit([&](auto v) {
    using T = typename decltype(v)::value_type;
    if constexpr (std::is_floating_point_v<T>) {
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      const double in_min = *lo;
      const double range = static_cast<double>(*hi) - in_min;
      const double scale = range > 0.0 ? (out_max - out_min) / range : 0.0;
      for (auto& x : v) x = static_cast<T>(out_min + (x - in_min) * scale);
    }
  });
  return out;
}

}  // namespace mia
