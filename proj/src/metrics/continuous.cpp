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

#include "mia/metrics/continuous.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mia/diagnostics.hpp"
#include "mia/error.hpp"

namespace mia {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_pair(const Tensor& r, const Tensor& p) {
  if (r.shape() != p.shape()) {
    throw ArgumentError("reference shape " + shape_to_string(r.shape()) + " differs from prediction shape " +
                        shape_to_string(p.shape()));
  }
  if (r.size() == 0) throw ArgumentError("continuous metrics need at least one element");
}

double range_of(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

double resolve_range(const std::vector<double>& ref, std::optional<double> data_range) {
  const double l = data_range ? *data_range : range_of(ref);
  if (!(l > 0.0) || !std::isfinite(l)) {
    throw ArgumentError("data range must be positive (got " + std::to_string(l) +
                        "); pass an explicit data range for a constant reference");
  }
  return l;
}

double mse_of(const std::vector<double>& r, const std::vector<double>& p) {
  double s = 0;
  for (std::size_t i = 0; i < r.size(); ++i) s += (r[i] - p[i]) * (r[i] - p[i]);
  return s / static_cast<double>(r.size());
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("gaussian sigma must be positive");
  std::vector<double> k(kSsimWindow);
  const double c = static_cast<double>(kSsimWindow / 2);
  double sum = 0;
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    const double x = static_cast<double>(i) - c;
    k[i] = std::exp(-x * x / (2 * sigma * sigma));
    sum += k[i];
  }
  for (auto& w : k) w /= sum;
  return k;
}

// Valid-mode correlation with `k` along every axis in turn.
std::vector<double> filter_valid(std::vector<double> data, Shape shape, const std::vector<double>& k) {
  const std::size_t w = k.size();
  for (std::size_t a = 0; a < shape.size(); ++a) {
    Shape out_shape = shape;
    out_shape[a] = shape[a] - w + 1;
    std::size_t inner = 1;
    for (std::size_t b = a + 1; b < shape.size(); ++b) inner *= shape[b];
    std::size_t outer = 1;
    for (std::size_t b = 0; b < a; ++b) outer *= shape[b];
    std::vector<double> out(outer * out_shape[a] * inner, 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
      const double* src = data.data() + o * shape[a] * inner;
      double* dst = out.data() + o * out_shape[a] * inner;
      for (std::size_t i = 0; i < out_shape[a]; ++i) {
        for (std::size_t t = 0; t < w; ++t) {
          const double* s = src + (i + t) * inner;
          double* d = dst + i * inner;
          for (std::size_t j = 0; j < inner; ++j) d[j] += k[t] * s[j];
        }
      }
    }
    data = std::move(out);
    shape = std::move(out_shape);
  }
  return data;
}

}  // namespace

ErrorMetrics error_metrics(const Tensor& reference, const Tensor& prediction) {
  require_pair(reference, prediction);
  const auto r = reference.to_doubles();
  const auto p = prediction.to_doubles();
  const double n = static_cast<double>(r.size());
  ErrorMetrics m;
  double abs_sum = 0, sq_sum = 0, mean = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    abs_sum += std::abs(r[i] - p[i]);
    sq_sum += (r[i] - p[i]) * (r[i] - p[i]);
    mean += r[i];
  }
  mean /= n;
  double ss_tot = 0;
  for (double v : r) ss_tot += (v - mean) * (v - mean);
  m.mae = abs_sum / n;
  m.mse = sq_sum / n;
  m.rmse = std::sqrt(m.mse);
  const double range = range_of(r);
  if (range == 0.0) {
    warn("NRMSE/R2: constant reference, reporting NaN");
    m.nrmse = kNaN;
    m.r2 = kNaN;
  } else {
    m.nrmse = m.rmse / range;
    m.r2 = 1.0 - sq_sum / ss_tot;
  }
  return m;
}

double psnr(const Tensor& reference, const Tensor& prediction, std::optional<double> data_range) {
  require_pair(reference, prediction);
  const auto r = reference.to_doubles();
  const auto p = prediction.to_doubles();
  const double l = resolve_range(r, data_range);
  const double rmse = std::sqrt(mse_of(r, p));
  if (rmse == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(l / rmse);
}

double ssim(const Tensor& reference, const Tensor& prediction, const SsimOptions& options) {
  require_pair(reference, prediction);
  const Shape& shape = reference.shape();
  for (std::size_t a = 0; a < shape.size(); ++a) {
    if (shape[a] < kSsimWindow) {
      throw ArgumentError("SSIM needs every extent >= " + std::to_string(kSsimWindow) + " but axis " +
                          std::to_string(a) + " has " + std::to_string(shape[a]) +
                          "; evaluate 2-D slices instead");
    }
  }
  const auto x = reference.to_doubles();
  const auto y = prediction.to_doubles();
  const double l = resolve_range(x, options.data_range);
  const double c1 = (options.k1 * l) * (options.k1 * l);
  const double c2 = (options.k2 * l) * (options.k2 * l);
  const auto k = gaussian_kernel(options.gaussian_sigma);

  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, shape, k);
  const auto my = filter_valid(y, shape, k);
  const auto mxx = filter_valid(std::move(xx), shape, k);
  const auto myy = filter_valid(std::move(yy), shape, k);
  const auto mxy = filter_valid(std::move(xy), shape, k);

  double total = 0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = mxx[i] - mx[i] * mx[i];
    const double vy = myy[i] - my[i] * my[i];
    const double cxy = mxy[i] - mx[i] * my[i];
    total += ((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

}  // namespace mia
