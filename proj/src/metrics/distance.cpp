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

#include "mia/metrics/distance.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mia/diagnostics.hpp"
#include "mia/error.hpp"
#include "mia/metrics/confusion.hpp"

namespace mia {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t a = shape.size() - 1; a-- > 0;) s[a] = s[a + 1] * shape[a + 1];
  return s;
}

void check_spacing(const Shape& shape, const std::vector<double>& spacing) {
  if (spacing.size() != shape.size()) {
    throw ArgumentError("spacing has " + std::to_string(spacing.size()) + " entries for a rank-" +
                        std::to_string(shape.size()) + " mask");
  }
  for (double s : spacing) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ArgumentError("spacing must be positive and finite");
  }
}

// 1-D squared distance transform of sampled function f along positions
// k * h (Felzenszwalb & Huttenlocher lower envelope of parabolas).
void edt_1d(const double* f, double* out, std::size_t n, double h, std::vector<std::size_t>& v,
            std::vector<double>& z) {
  v.resize(n);
  z.resize(n + 1);
  std::size_t k = 0;
  bool any = false;
  for (std::size_t q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (!any) {
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      any = true;
      continue;
    }
    const double xq = static_cast<double>(q) * h;
    double s;
    for (;;) {
      const double xv = static_cast<double>(v[k]) * h;
      s = ((f[q] + xq * xq) - (f[v[k]] + xv * xv)) / (2.0 * (xq - xv));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {
      // k == 0 and the new parabola dominates everywhere
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (!any) {
    std::fill(out, out + n, kInf);
    return;
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const double xq = static_cast<double>(q) * h;
    while (z[k + 1] < xq) ++k;
    const double dx = xq - static_cast<double>(v[k]) * h;
    out[q] = dx * dx + f[v[k]];
  }
}

// Squared distances over a grid, features marked with 0 and the rest inf.
void squared_edt(std::vector<double>& grid, const Shape& shape, const std::vector<double>& spacing) {
  const auto strides = strides_of(shape);
  const std::size_t total = grid.size();
  std::vector<double> line, result;
  std::vector<std::size_t> v;
  std::vector<double> z;
  for (std::size_t a = 0; a < shape.size(); ++a) {
    const std::size_t n = shape[a];
    const std::size_t stride = strides[a];
    line.resize(n);
    result.resize(n);
    const std::size_t lines = total / n;
    for (std::size_t l = 0; l < lines; ++l) {
      // line l: offset = outer * n * stride + inner
      const std::size_t inner = l % stride;
      const std::size_t outer = l / stride;
      const std::size_t base = outer * n * stride + inner;
      for (std::size_t i = 0; i < n; ++i) line[i] = grid[base + i * stride];
      edt_1d(line.data(), result.data(), n, spacing[a], v, z);
      for (std::size_t i = 0; i < n; ++i) grid[base + i * stride] = result[i];
    }
  }
}

struct Box {
  std::vector<std::size_t> lo, hi;  // inclusive
};

Box bounding_box(const Shape& shape, std::initializer_list<const SurfaceSet*> sets) {
  const auto strides = strides_of(shape);
  Box b{std::vector<std::size_t>(shape.size(), std::numeric_limits<std::size_t>::max()),
        std::vector<std::size_t>(shape.size(), 0)};
  for (const auto* s : sets) {
    for (auto idx : s->indices) {
      for (std::size_t a = 0; a < shape.size(); ++a) {
        const std::size_t c = idx / strides[a] % shape[a];
        b.lo[a] = std::min(b.lo[a], c);
        b.hi[a] = std::max(b.hi[a], c);
      }
    }
  }
  return b;
}

// Distances from `query` points to `features`, computed on the bounding box
// of both sets (the nearest feature of a query never depends on voxels
// outside it).
std::vector<double> directed(const SurfaceSet& query, const SurfaceSet& features, const std::vector<double>& spacing) {
  const Shape& shape = query.shape;
  const Box box = bounding_box(shape, {&query, &features});
  Shape sub(shape.size());
  for (std::size_t a = 0; a < shape.size(); ++a) sub[a] = box.hi[a] - box.lo[a] + 1;
  const auto strides = strides_of(shape);
  const auto sub_strides = strides_of(sub);
  auto to_sub = [&](std::size_t idx) {
    std::size_t out = 0;
    for (std::size_t a = 0; a < shape.size(); ++a) out += (idx / strides[a] % shape[a] - box.lo[a]) * sub_strides[a];
    return out;
  };
  std::vector<double> grid(element_count(sub), kInf);
  for (auto idx : features.indices) grid[to_sub(idx)] = 0.0;
  squared_edt(grid, sub, spacing);
  std::vector<double> out;
  out.reserve(query.indices.size());
  for (auto idx : query.indices) out.push_back(std::sqrt(grid[to_sub(idx)]));
  return out;
}

void require_same_shape(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ArgumentError("reference shape " + shape_to_string(a.shape()) + " differs from prediction shape " +
                        shape_to_string(b.shape()));
  }
}

}  // namespace

std::vector<double> SurfaceSet::physical(std::size_t k, const std::vector<double>& spacing) const {
  const auto strides = strides_of(shape);
  std::vector<double> p(shape.size());
  for (std::size_t a = 0; a < shape.size(); ++a) {
    p[a] = static_cast<double>(indices.at(k) / strides[a] % shape[a]) * spacing.at(a);
  }
  return p;
}

SurfaceSet extract_surface(const Tensor& mask) {
  const Tensor m = as_mask(mask);
  SurfaceSet s;
  s.shape = m.shape();
  const auto v = m.values<std::uint8_t>();
  const auto strides = strides_of(s.shape);
  const std::size_t rank = s.shape.size();
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i]) {
      bool border = false;
      for (std::size_t a = 0; a < rank && !border; ++a) {
        if (idx[a] == 0 || idx[a] + 1 == s.shape[a]) {
          border = true;
        } else if (!v[i - strides[a]] || !v[i + strides[a]]) {
          border = true;
        }
      }
      if (border) s.indices.push_back(i);
    }
    for (std::size_t a = rank; a-- > 0;) {
      if (++idx[a] < s.shape[a]) break;
      idx[a] = 0;
    }
  }
  return s;
}

Tensor distance_to_surface(const SurfaceSet& surface, const std::vector<double>& spacing) {
  check_spacing(surface.shape, spacing);
  if (surface.empty()) throw DomainError("distance transform of an empty mask (no surface)");
  Tensor out(DType::kFloat64, surface.shape);
  auto grid = out.values<double>();
  std::vector<double> g(grid.size(), kInf);
  for (auto idx : surface.indices) g[idx] = 0.0;
  squared_edt(g, surface.shape, spacing);
  for (std::size_t i = 0; i < g.size(); ++i) grid[i] = std::sqrt(g[i]);
  return out;
}

Tensor distance_transform(const Tensor& mask, const std::vector<double>& spacing) {
  return distance_to_surface(extract_surface(mask), spacing);
}

SurfaceDistances surface_distances(const Tensor& reference, const Tensor& prediction,
                                   const std::vector<double>& spacing) {
  require_same_shape(reference, prediction);
  check_spacing(reference.shape(), spacing);
  const SurfaceSet r = extract_surface(reference);
  const SurfaceSet p = extract_surface(prediction);
  SurfaceDistances d;
  d.ref_empty = r.empty();
  d.pred_empty = p.empty();
  if (d.defined()) {
    d.ref_to_pred = directed(r, p, spacing);
    d.pred_to_ref = directed(p, r, spacing);
  }
  return d;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw ArgumentError("percentile of an empty set");
  if (!(p >= 0.0 && p <= 100.0)) throw ArgumentError("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return frac == 0.0 ? values[lo] : values[lo] + frac * (values[hi] - values[lo]);
}

double hausdorff(const SurfaceDistances& d, double p) {
  if (!(p > 0.0 && p <= 100.0)) throw ArgumentError("HDRFDST percentile must lie in (0, 100]");
  if (!d.defined()) {
    warn("HDRFDST: empty mask, reporting NaN");
    return kNaN;
  }
  return std::max(percentile(d.ref_to_pred, p), percentile(d.pred_to_ref, p));
}

double average_distance(const SurfaceDistances& d) {
  if (!d.defined()) {
    warn("AVGDIST: empty mask, reporting NaN");
    return kNaN;
  }
  double sum = 0;
  for (double v : d.ref_to_pred) sum += v;
  for (double v : d.pred_to_ref) sum += v;
  return sum / static_cast<double>(d.ref_to_pred.size() + d.pred_to_ref.size());
}

SurfaceOverlap surface_overlap(const SurfaceDistances& d, double tolerance_mm) {
  if (!(tolerance_mm >= 0.0)) throw ArgumentError("surface tolerance must be >= 0");
  if (!d.defined()) {
    warn("SURFOVLP/SURFDICE: empty mask, reporting NaN");
    return {kNaN, kNaN, kNaN};
  }
  auto within = [&](const std::vector<double>& v) {
    return static_cast<double>(std::count_if(v.begin(), v.end(), [&](double x) { return x <= tolerance_mm; }));
  };
  const double a = within(d.ref_to_pred), b = within(d.pred_to_ref);
  const double na = static_cast<double>(d.ref_to_pred.size()), nb = static_cast<double>(d.pred_to_ref.size());
  return {a / na, b / nb, (a + b) / (na + nb)};
}

double hausdorff(const Tensor& reference, const Tensor& prediction, const std::vector<double>& spacing,
                 double p) {
  return hausdorff(surface_distances(reference, prediction, spacing), p);
}

double average_distance(const Tensor& reference, const Tensor& prediction, const std::vector<double>& spacing) {
  return average_distance(surface_distances(reference, prediction, spacing));
}

SurfaceOverlap surface_overlap(const Tensor& reference, const Tensor& prediction,
                               const std::vector<double>& spacing, double tolerance_mm) {
  return surface_overlap(surface_distances(reference, prediction, spacing), tolerance_mm);
}

double mahalanobis(const Tensor& reference, const Tensor& prediction, const std::vector<double>& spacing) {
  require_same_shape(reference, prediction);
  check_spacing(reference.shape(), spacing);
  const std::size_t rank = reference.rank();
  const auto strides = strides_of(reference.shape());

  struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    double n = 0;
  };
  auto moments = [&](const Tensor& mask) {
    const Tensor m = as_mask(mask);
    const auto v = m.values<std::uint8_t>();
    Moments out{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rank)),
                Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rank), static_cast<Eigen::Index>(rank)), 0};
    Eigen::VectorXd x(static_cast<Eigen::Index>(rank));
    // two passes keep the covariance well conditioned
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i]) continue;
      for (std::size_t a = 0; a < rank; ++a) {
        x[static_cast<Eigen::Index>(a)] = static_cast<double>(i / strides[a] % m.shape()[a]) * spacing[a];
      }
      out.mean += x;
      out.n += 1;
    }
    if (out.n == 0) return out;
    out.mean /= out.n;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i]) continue;
      for (std::size_t a = 0; a < rank; ++a) {
        x[static_cast<Eigen::Index>(a)] = static_cast<double>(i / strides[a] % m.shape()[a]) * spacing[a];
      }
      const Eigen::VectorXd dx = x - out.mean;
      out.cov += dx * dx.transpose();
    }
    out.cov /= out.n;
    return out;
  };
  const Moments r = moments(reference);
  const Moments p = moments(prediction);
  if (r.n < 2 || p.n < 2) {
    warn("MAHLNBS: each mask needs at least two foreground voxels, reporting NaN");
    return kNaN;
  }
  const Eigen::MatrixXd pooled = (r.n * r.cov + p.n * p.cov) / (r.n + p.n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(pooled);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    warn("MAHLNBS: singular pooled covariance, reporting NaN");
    return kNaN;
  }
  const Eigen::VectorXd diff = r.mean - p.mean;
  const double q = diff.dot(lu.solve(diff));
  return std::sqrt(std::max(0.0, q));
}

}  // namespace mia
