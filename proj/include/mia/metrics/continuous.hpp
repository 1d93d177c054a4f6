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

#include <optional>

#include "mia/tensor.hpp"

namespace mia {

// Intensity metrics for reconstruction and regression. Geometry is ignored.

struct ErrorMetrics {
  double mae = 0;
  double mse = 0;
  double rmse = 0;
  double nrmse = 0;  // RMSE over the reference range
  double r2 = 0;
};

/// NRMSE and R2 are NaN (with a warning) for a constant reference.
ErrorMetrics error_metrics(const Tensor& reference, const Tensor& prediction);

/// 20 log10(L / RMSE); +inf for identical images. L defaults to the
/// reference range. Throws ArgumentError when L <= 0.
double psnr(const Tensor& reference, const Tensor& prediction, std::optional<double> data_range = {});

struct SsimOptions {
  std::optional<double> data_range;
  double gaussian_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

inline constexpr std::size_t kSsimWindow = 7;

/// Mean SSIM over every valid placement of a 7-per-axis truncated Gaussian
/// window, in as many dimensions as the inputs have.
double ssim(const Tensor& reference, const Tensor& prediction, const SsimOptions& options = {});

}  // namespace mia
