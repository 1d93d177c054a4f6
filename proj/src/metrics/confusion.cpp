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

#include "mia/metrics/confusion.hpp"

#include <cmath>
#include <limits>

#include "mia/diagnostics.hpp"
#include "mia/error.hpp"

namespace mia {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio(double num, double den, const char* metric) {
  if (den == 0.0) {
    warn(std::string(metric) + ": zero denominator, reporting NaN");
    return kNaN;
  }
  return num / den;
}

double d(std::uint64_t v) { return static_cast<double>(v); }

double choose2(double v) { return v * (v - 1.0) / 2.0; }

double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

double entropy(std::initializer_list<double> counts, double n) {
  double h = 0.0;
  for (double c : counts) h -= plogp(c / n);
  return h;
}

}  // namespace

Tensor binarize(const Tensor& label_image, std::int64_t label) {
  if (label < 0) throw ArgumentError("label must be >= 0");
  Tensor out(DType::kUInt8, label_image.shape());
  auto dst = out.values<std::uint8_t>();
  const auto target = static_cast<double>(label);
  label_image.visit([&](auto src) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<double>(src[i]) == target ? 1 : 0;
  });
  return out;
}

Tensor as_mask(const Tensor& mask) {
  Tensor out = mask.dtype() == DType::kUInt8 ? mask : mask.astype(DType::kUInt8);
  bool ok = true;
  mask.visit([&](auto v) {
    for (auto x : v) {
      if (x != 0 && x != 1) {
        ok = false;
        return;
      }
    }
  });
  if (!ok) throw ArgumentError("mask values must be 0 or 1");
  return out;
}

ConfusionMatrix confusion(const Tensor& reference, const Tensor& prediction) {
  if (reference.shape() != prediction.shape()) {
    throw ArgumentError("reference shape " + shape_to_string(reference.shape()) + " differs from prediction shape " +
                        shape_to_string(prediction.shape()));
  }
  const Tensor r = as_mask(reference);
  const Tensor p = as_mask(prediction);
  const auto rv = r.values<std::uint8_t>();
  const auto pv = p.values<std::uint8_t>();
  std::uint64_t counts[4] = {0, 0, 0, 0};  // index 2r + p
  for (std::size_t i = 0; i < rv.size(); ++i) ++counts[2 * rv[i] + pv[i]];
  ConfusionMatrix cm;
  cm.tn = counts[0];
  cm.fp = counts[1];
  cm.fn = counts[2];
  cm.tp = counts[3];
  return cm;
}

double dice(const ConfusionMatrix& cm) { return ratio(2 * d(cm.tp), 2 * d(cm.tp) + d(cm.fp) + d(cm.fn), "DICE"); }
double jaccard(const ConfusionMatrix& cm) { return ratio(d(cm.tp), d(cm.tp) + d(cm.fp) + d(cm.fn), "JACRD"); }
double sensitivity(const ConfusionMatrix& cm) { return ratio(d(cm.tp), d(cm.tp) + d(cm.fn), "SNSVTY"); }
double specificity(const ConfusionMatrix& cm) { return ratio(d(cm.tn), d(cm.tn) + d(cm.fp), "SPCFTY"); }
double fallout(const ConfusionMatrix& cm) { return ratio(d(cm.fp), d(cm.fp) + d(cm.tn), "FALLOUT"); }
double false_negative_rate(const ConfusionMatrix& cm) { return ratio(d(cm.fn), d(cm.fn) + d(cm.tp), "FNR"); }
double accuracy(const ConfusionMatrix& cm) { return ratio(d(cm.tp) + d(cm.tn), d(cm.n()), "ACURCY"); }
double precision(const ConfusionMatrix& cm) { return ratio(d(cm.tp), d(cm.tp) + d(cm.fp), "PRCISON"); }

double f_measure(const ConfusionMatrix& cm, double beta) {
  if (!(beta > 0.0)) throw ArgumentError("FMEASR: beta must be positive");
  const double b2 = beta * beta;
  // Same quantity as (1+b2) P S / (b2 P + S), written over the counts so it
  // stays defined when only one of P and S is.
  return ratio((1 + b2) * d(cm.tp), (1 + b2) * d(cm.tp) + b2 * d(cm.fn) + d(cm.fp), "FMEASR");
}

double volume_similarity(const ConfusionMatrix& cm) {
  const double den = 2 * d(cm.tp) + d(cm.fp) + d(cm.fn);
  const double r = ratio(std::abs(d(cm.fn) - d(cm.fp)), den, "VOLSMTY");
  return 1.0 - r;
}

NamedValues ratio_metrics(const ConfusionMatrix& cm, double beta) {
  if (cm.n() == 0) throw ArgumentError("empty confusion matrix");
  return {{"DICE", dice(cm)},          {"JACRD", jaccard(cm)},
          {"SNSVTY", sensitivity(cm)}, {"SPCFTY", specificity(cm)},
          {"FALLOUT", fallout(cm)},    {"FNR", false_negative_rate(cm)},
          {"ACURCY", accuracy(cm)},    {"PRCISON", precision(cm)},
          {"FMEASR", f_measure(cm, beta)}, {"VOLSMTY", volume_similarity(cm)}};
}

namespace {

struct PairSums {
  double cells, rows, cols, total;
};

PairSums pair_sums(const ConfusionMatrix& cm) {
  if (cm.n() < 2) throw ArgumentError("pair counting needs at least two voxels");
  const double tp = d(cm.tp), fp = d(cm.fp), fn = d(cm.fn), tn = d(cm.tn);
  return {choose2(tp) + choose2(fp) + choose2(fn) + choose2(tn), choose2(tp + fn) + choose2(fp + tn),
          choose2(tp + fp) + choose2(fn + tn), choose2(d(cm.n()))};
}

}  // namespace

double rand_index(const ConfusionMatrix& cm) {
  const PairSums s = pair_sums(cm);
  return (s.total + 2 * s.cells - s.rows - s.cols) / s.total;
}

double adjusted_rand_index(const ConfusionMatrix& cm) {
  const PairSums s = pair_sums(cm);
  const double expected = s.rows * s.cols / s.total;
  const double max_index = 0.5 * (s.rows + s.cols);
  return ratio(s.cells - expected, max_index - expected, "ADJRIND");
}

double mutual_information(const ConfusionMatrix& cm) {
  if (cm.n() == 0) throw ArgumentError("empty confusion matrix");
  const double n = d(cm.n());
  const double tp = d(cm.tp), fp = d(cm.fp), fn = d(cm.fn), tn = d(cm.tn);
  const double hr = entropy({tp + fn, fp + tn}, n);
  const double hp = entropy({tp + fp, fn + tn}, n);
  const double hrp = entropy({tp, fp, fn, tn}, n);
  return std::max(0.0, hr + hp - hrp);
}

double variation_of_information(const ConfusionMatrix& cm) {
  if (cm.n() == 0) throw ArgumentError("empty confusion matrix");
  const double n = d(cm.n());
  const double tp = d(cm.tp), fp = d(cm.fp), fn = d(cm.fn), tn = d(cm.tn);
  const double hr = entropy({tp + fn, fp + tn}, n);
  const double hp = entropy({tp + fp, fn + tn}, n);
  return std::max(0.0, hr + hp - 2 * mutual_information(cm));
}

double global_consistency_error(const ConfusionMatrix& cm) {
  if (cm.n() == 0) throw ArgumentError("empty confusion matrix");
  const double tp = d(cm.tp), fp = d(cm.fp), fn = d(cm.fn), tn = d(cm.tn);
  auto term = [](double num, double den) { return num == 0.0 ? 0.0 : num / den; };
  const double e_rp = term(fn * (fn + 2 * tp), tp + fn) + term(fp * (fp + 2 * tn), tn + fp);
  const double e_pr = term(fp * (fp + 2 * tp), tp + fp) + term(fn * (fn + 2 * tn), tn + fn);
  return std::min(e_rp, e_pr) / d(cm.n());
}

double kappa(const ConfusionMatrix& cm) {
  if (cm.n() == 0) throw ArgumentError("empty confusion matrix");
  const double n = d(cm.n());
  const double tp = d(cm.tp), fp = d(cm.fp), fn = d(cm.fn), tn = d(cm.tn);
  const double po = (tp + tn) / n;
  const double pe = ((tp + fn) * (tp + fp) + (tn + fp) * (tn + fn)) / (n * n);
  return ratio(po - pe, 1.0 - pe, "KAPPA");
}

double auc(const ConfusionMatrix& cm) {
  const double s = sensitivity(cm);
  const double p = specificity(cm);
  return (s + p) / 2.0;
}

double interclass_correlation(const ConfusionMatrix& cm) {
  const double n = d(cm.n());
  if (cm.n() < 2) throw ArgumentError("ICCORR needs at least two voxels");
  const double tp = d(cm.tp), fp = d(cm.fp), fn = d(cm.fn), tn = d(cm.tn);
  // Voxel means m_i: 1 (tp), 0.5 (fp, fn), 0 (tn); grand mean M.
  const double grand = (2 * tp + fp + fn) / (2 * n);
  const double ss_between =
      2.0 * (tp * (1 - grand) * (1 - grand) + (fp + fn) * (0.5 - grand) * (0.5 - grand) + tn * grand * grand);
  const double ms_between = ss_between / (n - 1);
  const double ms_within = (fp + fn) * 0.5 / n;  // each disagreeing voxel contributes 2 * 0.25
  return ratio(ms_between - ms_within, ms_between + ms_within, "ICCORR");
}

double probabilistic_distance(const ConfusionMatrix& cm) {
  return ratio(d(cm.fp) + d(cm.fn), 2 * d(cm.tp), "PROBDST");
}

double area(const Tensor& mask, const ImageGeometry& geometry, std::optional<std::size_t> slice_index) {
  const Tensor m = as_mask(mask);
  if (geometry.ndim() != m.rank()) throw ArgumentError("AREA: geometry rank does not match the mask");
  const auto v = m.values<std::uint8_t>();
  if (m.rank() == 2) {
    std::uint64_t count = 0;
    for (auto x : v) count += x;
    return static_cast<double>(count) * geometry.spacing[0] * geometry.spacing[1];
  }
  if (m.rank() != 3) throw ArgumentError("AREA needs a 2-D or 3-D mask");
  const std::size_t slice = slice_index.value_or(m.shape()[0] / 2);
  if (slice >= m.shape()[0]) {
    throw ArgumentError("AREA: slice " + std::to_string(slice) + " outside [0, " + std::to_string(m.shape()[0]) +
                        ")");
  }
  const std::size_t per = m.shape()[1] * m.shape()[2];
  std::uint64_t count = 0;
  for (std::size_t i = slice * per; i < (slice + 1) * per; ++i) count += v[i];
  return static_cast<double>(count) * geometry.spacing[1] * geometry.spacing[2];
}

double volume(const Tensor& mask, const ImageGeometry& geometry) {
  const Tensor m = as_mask(mask);
  if (geometry.ndim() != m.rank()) throw ArgumentError("VOL: geometry rank does not match the mask");
  std::uint64_t count = 0;
  for (auto x : m.values<std::uint8_t>()) count += x;
  return static_cast<double>(count) * voxel_volume(geometry);
}

}  // namespace mia
