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

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mia/geometry.hpp"
#include "mia/tensor.hpp"

namespace mia {

// Categorical metrics from voxel counts. Undefined values (zero
// denominators) come back as NaN and raise a warning through mia::warn.

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t n() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// 1 where the voxel equals `label`, else 0 (uint8).
Tensor binarize(const Tensor& label_image, std::int64_t label);

/// Checks a binary mask (any dtype, values 0/1) and returns it as uint8.
Tensor as_mask(const Tensor& mask);

/// Throws ArgumentError on shape mismatch or non-binary values.
ConfusionMatrix confusion(const Tensor& reference, const Tensor& prediction);

using NamedValues = std::vector<std::pair<std::string, double>>;

double dice(const ConfusionMatrix& cm);
double jaccard(const ConfusionMatrix& cm);
double sensitivity(const ConfusionMatrix& cm);
double specificity(const ConfusionMatrix& cm);
double fallout(const ConfusionMatrix& cm);
double false_negative_rate(const ConfusionMatrix& cm);
double accuracy(const ConfusionMatrix& cm);
double precision(const ConfusionMatrix& cm);
double f_measure(const ConfusionMatrix& cm, double beta = 1.0);
double volume_similarity(const ConfusionMatrix& cm);

/// DICE, JACRD, SNSVTY, SPCFTY, FALLOUT, FNR, ACURCY, PRCISON, FMEASR, VOLSMTY.
NamedValues ratio_metrics(const ConfusionMatrix& cm, double beta = 1.0);

/// Pair counting over the 2x2 contingency. Throws ArgumentError for n < 2.
double rand_index(const ConfusionMatrix& cm);
double adjusted_rand_index(const ConfusionMatrix& cm);

/// Entropies in bits.
double mutual_information(const ConfusionMatrix& cm);
double variation_of_information(const ConfusionMatrix& cm);

/// Global consistency error, binary closed form:
///   E(R->P) = fn(fn+2tp)/(tp+fn) + fp(fp+2tn)/(tn+fp)
///   E(P->R) = fp(fp+2tp)/(tp+fp) + fn(fn+2tn)/(tn+fn)
///   GCOERR  = min(E(R->P), E(P->R)) / n
/// Terms whose numerator is zero count as zero.
double global_consistency_error(const ConfusionMatrix& cm);
double kappa(const ConfusionMatrix& cm);
/// Balanced accuracy, (SNSVTY + SPCFTY) / 2, the crisp-mask reading of AUC.
double auc(const ConfusionMatrix& cm);
/// One-way ICC with reference and prediction as the two raters over voxels:
/// (MSb - MSw) / (MSb + MSw).
double interclass_correlation(const ConfusionMatrix& cm);
/// sum|r - p| / (2 sum r*p) over voxel values.
double probabilistic_distance(const ConfusionMatrix& cm);

/// Foreground area (mm^2) of the axis-0 slice `slice_index` (default: the
/// central slice, extent / 2). For 2-D masks the whole image is the slice.
double area(const Tensor& mask, const ImageGeometry& geometry, std::optional<std::size_t> slice_index = {});
/// Foreground count times voxel volume (mm^3).
double volume(const Tensor& mask, const ImageGeometry& geometry);

}  // namespace mia
