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

// Brute-force reference computations for the metric checks. Everything here
// works directly on voxel arrays and shares no code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace oracle {

using Mask = std::vector<std::uint8_t>;
using Dims = std::array<long, 3>;

struct Counts {
  double tp = 0, fp = 0, tn = 0, fn = 0;
  double n() const { return tp + fp + tn + fn; }
};

inline Counts count(const Mask& r, const Mask& p) {
  Counts c;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] && p[i]) c.tp += 1;
    else if (!r[i] && p[i]) c.fp += 1;
    else if (r[i] && !p[i]) c.fn += 1;
    else c.tn += 1;
  }
  return c;
}

inline double div(double a, double b) { return b == 0 ? std::numeric_limits<double>::quiet_NaN() : a / b; }

// Hand formulas over the four counts.
inline std::map<std::string, double> ratio_metrics(const Counts& c) {
  std::map<std::string, double> m;
  m["DICE"] = div(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  m["JACRD"] = div(c.tp, c.tp + c.fp + c.fn);
  m["SNSVTY"] = div(c.tp, c.tp + c.fn);
  m["SPCFTY"] = div(c.tn, c.tn + c.fp);
  m["FALLOUT"] = div(c.fp, c.fp + c.tn);
  m["FNR"] = div(c.fn, c.fn + c.tp);
  m["ACURCY"] = div(c.tp + c.tn, c.n());
  m["PRCISON"] = div(c.tp, c.tp + c.fp);
  m["FMEASR"] = div(2 * m["PRCISON"] * m["SNSVTY"], m["PRCISON"] + m["SNSVTY"]);
  m["VOLSMTY"] = 1 - div(std::abs(c.fn - c.fp), 2 * c.tp + c.fp + c.fn);
  const double po = (c.tp + c.tn) / c.n();
  const double pe = ((c.tp + c.fn) * (c.tp + c.fp) + (c.tn + c.fp) * (c.tn + c.fn)) / (c.n() * c.n());
  m["KAPPA"] = div(po - pe, 1 - pe);
  m["AUC"] = (m["SNSVTY"] + m["SPCFTY"]) / 2;
  return m;
}

struct PairIndices {
  double rand, adjusted;
};

// Every unordered voxel pair.
inline PairIndices pairs(const Mask& r, const Mask& p) {
  double a = 0, b = 0, c = 0, d = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = i + 1; j < r.size(); ++j) {
      const bool sr = r[i] == r[j], sp = p[i] == p[j];
      if (sr && sp) a += 1;
      else if (sr) b += 1;
      else if (sp) c += 1;
      else d += 1;
    }
  }
  return {(a + d) / (a + b + c + d), div(2 * (a * d - b * c), (a + b) * (b + d) + (a + c) * (c + d))};
}

inline double entropy(const std::map<int, double>& h, double n) {
  double e = 0;
  for (const auto& [k, v] : h) {
    if (v > 0) e -= v / n * std::log2(v / n);
  }
  return e;
}

struct Information {
  double mi, voi;
};

inline Information information(const Mask& r, const Mask& p) {
  std::map<int, double> hr, hp, hj;
  for (std::size_t i = 0; i < r.size(); ++i) {
    hr[r[i]] += 1;
    hp[p[i]] += 1;
    hj[r[i] * 2 + p[i]] += 1;
  }
  const double n = double(r.size());
  const double er = entropy(hr, n), ep = entropy(hp, n), ej = entropy(hj, n);
  return {er + ep - ej, 2 * ej - er - ep};
}

// Per-voxel local refinement error, min over the two directions.
inline double gce(const Mask& r, const Mask& p) {
  auto region_size = [](const Mask& m, std::uint8_t v) { return double(std::count(m.begin(), m.end(), v)); };
  auto both = [&](std::uint8_t a, std::uint8_t b) {
    double n = 0;
    for (std::size_t i = 0; i < r.size(); ++i) n += r[i] == a && p[i] == b;
    return n;
  };
  double e_rp = 0, e_pr = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double sr = region_size(r, r[i]), sp = region_size(p, p[i]), inter = both(r[i], p[i]);
    e_rp += (sr - inter) / sr;
    e_pr += (sp - inter) / sp;
  }
  return std::min(e_rp, e_pr) / double(r.size());
}

inline double icc(const Mask& r, const Mask& p) {
  const double n = double(r.size());
  double grand = 0;
  for (std::size_t i = 0; i < r.size(); ++i) grand += r[i] + p[i];
  grand /= 2 * n;
  double ssb = 0, ssw = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double m = (r[i] + p[i]) / 2.0;
    ssb += 2 * (m - grand) * (m - grand);
    ssw += (r[i] - m) * (r[i] - m) + (p[i] - m) * (p[i] - m);
  }
  const double msb = ssb / (n - 1), msw = ssw / n;
  return div(msb - msw, msb + msw);
}

inline double probdst(const Mask& r, const Mask& p) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    num += std::abs(double(r[i]) - double(p[i]));
    den += double(r[i]) * double(p[i]);
  }
  return div(num, 2 * den);
}

// --- geometry ----------------------------------------------------------------

inline std::vector<Dims> surface(const Mask& m, const Dims& d) {
  auto at = [&](long z, long y, long x) -> int {
    if (z < 0 || y < 0 || x < 0 || z >= d[0] || y >= d[1] || x >= d[2]) return 0;
    return m[std::size_t((z * d[1] + y) * d[2] + x)];
  };
  std::vector<Dims> out;
  for (long z = 0; z < d[0]; ++z)
    for (long y = 0; y < d[1]; ++y)
      for (long x = 0; x < d[2]; ++x) {
        if (!at(z, y, x)) continue;
        if (!at(z - 1, y, x) || !at(z + 1, y, x) || !at(z, y - 1, x) || !at(z, y + 1, x) || !at(z, y, x - 1) ||
            !at(z, y, x + 1))
          out.push_back({z, y, x});
      }
  return out;
}

inline std::vector<double> directed(const std::vector<Dims>& from, const std::vector<Dims>& to,
                                    const std::array<double, 3>& sp) {
  std::vector<double> out;
  for (const auto& a : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : to) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += std::pow(double(a[k] - b[k]) * sp[k], 2);
      best = std::min(best, std::sqrt(s));
    }
    out.push_back(best);
  }
  return out;
}

inline double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (double(v.size()) - 1) * q / 100.0;
  const auto lo = std::size_t(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - double(lo)) * (v[hi] - v[lo]);
}

// Pooled biased covariance, inverted by cofactors.
inline double mahalanobis(const Mask& r, const Mask& p, const Dims& d, const std::array<double, 3>& sp) {
  struct M {
    double n = 0;
    std::array<double, 3> mu{};
    std::array<std::array<double, 3>, 3> cov{};
  };
  auto moments = [&](const Mask& m) {
    M out;
    std::vector<std::array<double, 3>> pts;
    for (long z = 0; z < d[0]; ++z)
      for (long y = 0; y < d[1]; ++y)
        for (long x = 0; x < d[2]; ++x)
          if (m[std::size_t((z * d[1] + y) * d[2] + x)]) pts.push_back({z * sp[0], y * sp[1], x * sp[2]});
    out.n = double(pts.size());
    for (const auto& q : pts)
      for (int k = 0; k < 3; ++k) out.mu[k] += q[k] / out.n;
    for (const auto& q : pts)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out.cov[i][j] += (q[i] - out.mu[i]) * (q[j] - out.mu[j]) / out.n;
    return out;
  };
  const M a = moments(r), b = moments(p);
  double s[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s[i][j] = (a.n * a.cov[i][j] + b.n * b.cov[i][j]) / (a.n + b.n);
  const double det = s[0][0] * (s[1][1] * s[2][2] - s[1][2] * s[2][1]) -
                     s[0][1] * (s[1][0] * s[2][2] - s[1][2] * s[2][0]) +
                     s[0][2] * (s[1][0] * s[2][1] - s[1][1] * s[2][0]);
  double inv[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      inv[i][j] = (s[r0][c0] * s[r1][c1] - s[r0][c1] * s[r1][c0]) / det;
    }
  double diff[3], q = 0;
  for (int k = 0; k < 3; ++k) diff[k] = a.mu[k] - b.mu[k];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) q += diff[i] * inv[i][j] * diff[j];
  return std::sqrt(q);
}

}  // namespace oracle
