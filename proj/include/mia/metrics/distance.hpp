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
#include <vector>

#include "mia/tensor.hpp"

namespace mia {

// Spacing-aware distance metrics. Distances are measured in physical units
// (index times spacing per axis) between surface voxel centres.

/// Foreground voxels with at least one face neighbour that is background or
/// outside the image.
struct SurfaceSet {
  Shape shape;
  std::vector<std::size_t> indices;  // linear C-order indices, ascending

  bool empty() const { return indices.empty(); }
  /// Physical coordinates of point k.
  std::vector<double> physical(std::size_t k, const std::vector<double>& spacing) const;
};

SurfaceSet extract_surface(const Tensor& mask);

/// Exact Euclidean distance (float64) from every voxel to the nearest point
/// of `surface`. Separable lower-envelope transform over squared distances.
Tensor distance_to_surface(const SurfaceSet& surface, const std::vector<double>& spacing);

/// distance_to_surface(extract_surface(mask)). Throws DomainError for an
/// empty mask.
Tensor distance_transform(const Tensor& mask, const std::vector<double>& spacing);

/// Directed surface distances of a mask pair, computed once and shared by
/// the metrics below.
struct SurfaceDistances {
  std::vector<double> ref_to_pred;  // d(a, S_pred) for a in S_ref
  std::vector<double> pred_to_ref;  // d(b, S_ref) for b in S_pred
  bool ref_empty = true;
  bool pred_empty = true;

  bool defined() const { return !ref_empty && !pred_empty; }
};

SurfaceDistances surface_distances(const Tensor& reference, const Tensor& prediction,
                                   const std::vector<double>& spacing);

/// Linear-interpolation percentile (inclusive) of `values`, p in [0, 100].
double percentile(std::vector<double> values, double p);

/// max of the per-direction percentiles; NaN with a warning when a mask is
/// empty. Throws ArgumentError unless 0 < percentile <= 100.
double hausdorff(const SurfaceDistances& d, double percentile = 100.0);
double average_distance(const SurfaceDistances& d);

struct SurfaceOverlap {
  double ref = 0;   // SURFOVLP_REF
  double pred = 0;  // SURFOVLP_PRED
  double dice = 0;  // SURFDICE
};

SurfaceOverlap surface_overlap(const SurfaceDistances& d, double tolerance_mm);

double hausdorff(const Tensor& reference, const Tensor& prediction, const std::vector<double>& spacing,
                 double percentile = 100.0);
double average_distance(const Tensor& reference, const Tensor& prediction, const std::vector<double>& spacing);
SurfaceOverlap surface_overlap(const Tensor& reference, const Tensor& prediction,
                               const std::vector<double>& spacing, double tolerance_mm);

/// Mahalanobis distance between the foreground point clouds, pooled biased
/// covariance. NaN with a warning for fewer than two voxels in a mask or a
/// singular covariance.
double mahalanobis(const Tensor& reference, const Tensor& prediction, const std::vector<double>& spacing);

}  // namespace mia
