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

#include "mia/geometry.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <utility>

#include "mia/error.hpp"

namespace mia {
namespace {

// Determinant by Gaussian elimination with partial pivoting (ndim <= 5).
double determinant(std::vector<double> m, std::size_t n) {
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(m[r * n + c]) > std::abs(m[pivot * n + c])) pivot = r;
    }
    if (m[pivot * n + c] == 0.0) return 0.0;
    if (pivot != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(m[c * n + k], m[pivot * n + k]);
      det = -det;
    }
    det *= m[c * n + c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = m[r * n + c] / m[c * n + c];
      for (std::size_t k = c; k < n; ++k) m[r * n + k] -= f * m[c * n + k];
    }
  }
  return det;
}

}  // namespace

ImageGeometry ImageGeometry::identity(std::size_t ndim) {
  ImageGeometry g;
  g.spacing.assign(ndim, 1.0);
  g.origin.assign(ndim, 0.0);
  g.direction.assign(ndim * ndim, 0.0);
  for (std::size_t i = 0; i < ndim; ++i) g.direction[i * ndim + i] = 1.0;
  return g;
}

ImageGeometry ImageGeometry::with_spacing(std::vector<double> spacing) {
  ImageGeometry g = identity(spacing.size());
  g.spacing = std::move(spacing);
  return g;
}

void ImageGeometry::validate() const {
  const std::size_t n = spacing.size();
  if (n == 0) throw ArgumentError("geometry has no axes");
  if (origin.size() != n || direction.size() != n * n) {
    throw ArgumentError("geometry sizes disagree: " + std::to_string(n) + " spacings, " +
                        std::to_string(origin.size()) + " origin values, " +
                        std::to_string(direction.size()) + " direction values");
  }
  for (double s : spacing) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ArgumentError("spacing must be strictly positive, got " + std::to_string(s));
    }
  }
  const double det = determinant(direction, n);
  if (std::abs(std::abs(det) - 1.0) > 1e-6) {
    throw ArgumentError("direction matrix must have |det| == 1, got " + std::to_string(det));
  }
}

double voxel_volume(const ImageGeometry& geometry) {
  return std::accumulate(geometry.spacing.begin(), geometry.spacing.end(), 1.0,
                         std::multiplies<>());
}

}  // namespace mia
