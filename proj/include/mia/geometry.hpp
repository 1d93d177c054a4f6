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

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mia {

/// Physical placement of an image grid. All vectors follow the tensor axis
/// order (z, y, x for volumes); `direction` is ndim x ndim, row-major.
struct ImageGeometry {
  std::vector<double> spacing;
  std::vector<double> origin;
  std::vector<double> direction;

  static ImageGeometry identity(std::size_t ndim);
  static ImageGeometry with_spacing(std::vector<double> spacing);

  std::size_t ndim() const { return spacing.size(); }

  /// Throws ArgumentError unless spacing > 0, sizes agree and |det| == 1
  /// within 1e-6.
  void validate() const;

  friend bool operator==(const ImageGeometry&, const ImageGeometry&) = default;
};

/// Product of the spacings (mm^3 for volumes, mm^2 for planes).
double voxel_volume(const ImageGeometry& geometry);

/// Rectangular region of the spatial axes. An expression with no axes means
/// the full extent of whatever it is applied to.
struct IndexExpression {
  std::vector<std::int64_t> start;
  std::vector<std::size_t> size;

  static IndexExpression full() { return {}; }
  bool is_full() const { return start.empty(); }

  friend bool operator==(const IndexExpression&, const IndexExpression&) = default;
};

}  // namespace mia
