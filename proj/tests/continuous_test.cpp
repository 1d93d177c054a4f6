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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "mia/diagnostics.hpp"
#include "mia/error.hpp"
#include "mia/metrics/continuous.hpp"

namespace mia {
namespace {

Tensor vec(Shape shape, std::vector<double> v) { return Tensor(std::move(shape), v); }

Tensor noise(Shape shape, std::mt19937_64& rng, double lo = 0, double hi = 1) {
  Tensor t(DType::kFloat64, std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& x : t.values<double>()) x = d(rng);
  return t;
}

// Literal sliding-window SSIM: for every window position, weighted moments
// over the full window with n-D Gaussian weights normalised to sum 1.
double ssim_oracle_2d(const Tensor& a, const Tensor& b, double L) {
  const auto x = a.values<double>(), y = b.values<double>();
  const long h = long(a.shape()[0]), w = long(a.shape()[1]);
  double wt[7][7], wsum = 0;
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) {
      wt[i][j] = std::exp(-((i - 3) * (i - 3) + (j - 3) * (j - 3)) / (2 * 1.5 * 1.5));
      wsum += wt[i][j];
    }
  const double c1 = (0.01 * L) * (0.01 * L), c2 = (0.03 * L) * (0.03 * L);
  double total = 0;
  long count = 0;
  for (long r = 0; r + 7 <= h; ++r)
    for (long c = 0; c + 7 <= w; ++c) {
      double mx = 0, my = 0;
      for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) {
          mx += wt[i][j] / wsum * x[(r + i) * w + c + j];
          my += wt[i][j] / wsum * y[(r + i) * w + c + j];
        }
      double vx = 0, vy = 0, cxy = 0;
      for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) {
          const double dx = x[(r + i) * w + c + j] - mx, dy = y[(r + i) * w + c + j] - my;
          vx += wt[i][j] / wsum * dx * dx;
          vy += wt[i][j] / wsum * dy * dy;
          cxy += wt[i][j] / wsum * dx * dy;
        }
      total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return total / double(count);
}

double ssim_oracle_3d(const Tensor& a, const Tensor& b, double L) {
  const auto x = a.values<double>(), y = b.values<double>();
  const long D = long(a.shape()[0]), H = long(a.shape()[1]), W = long(a.shape()[2]);
  std::vector<double> wt(343);
  double wsum = 0;
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j)
      for (int k = 0; k < 7; ++k) {
        wt[(i * 7 + j) * 7 + k] = std::exp(-((i - 3) * (i - 3) + (j - 3) * (j - 3) + (k - 3) * (k - 3)) / 4.5);
        wsum += wt[(i * 7 + j) * 7 + k];
      }
  const double c1 = (0.01 * L) * (0.01 * L), c2 = (0.03 * L) * (0.03 * L);
  double total = 0;
  long count = 0;
  for (long z = 0; z + 7 <= D; ++z)
    for (long r = 0; r + 7 <= H; ++r)
      for (long c = 0; c + 7 <= W; ++c) {
        auto at = [&](auto v, int i, int j, int k) { return v[((z + i) * H + r + j) * W + c + k]; };
        double mx = 0, my = 0;
        for (int i = 0; i < 7; ++i)
          for (int j = 0; j < 7; ++j)
            for (int k = 0; k < 7; ++k) {
              const double g = wt[(i * 7 + j) * 7 + k] / wsum;
              mx += g * at(x, i, j, k);
              my += g * at(y, i, j, k);
            }
        double vx = 0, vy = 0, cxy = 0;
        for (int i = 0; i < 7; ++i)
          for (int j = 0; j < 7; ++j)
            for (int k = 0; k < 7; ++k) {
              const double g = wt[(i * 7 + j) * 7 + k] / wsum;
              const double dx = at(x, i, j, k) - mx, dy = at(y, i, j, k) - my;
              vx += g * dx * dx;
              vy += g * dy * dy;
              cxy += g * dx * dy;
            }
        total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
  return total / double(count);
}

double range(const Tensor& t) {
  const auto v = t.values<double>();
  return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
}

TEST(ErrorMetrics, IdenticalImages) {
  std::mt19937_64 rng(1);
  const Tensor r = noise({4, 5}, rng);
  const auto m = error_metrics(r, r);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.mse, 0.0);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.nrmse, 0.0);
  EXPECT_EQ(m.r2, 1.0);
}

TEST(ErrorMetrics, HandComputedPair) {
  const auto m = error_metrics(vec({2}, {0, 2}), vec({2}, {1, 1}));
  EXPECT_EQ(m.mae, 1.0);
  EXPECT_EQ(m.rmse, 1.0);
  EXPECT_EQ(m.nrmse, 0.5);
  EXPECT_EQ(m.r2, 0.0);
}

TEST(ErrorMetrics, MeanPredictionHasZeroR2) {
  const auto m = error_metrics(vec({4}, {1, 2, 3, 6}), vec({4}, {3, 3, 3, 3}));
  EXPECT_EQ(m.r2, 0.0);
}

TEST(ErrorMetrics, ConstantReferenceGivesNaNWithWarning) {
  ScopedWarningCapture capture;
  const auto m = error_metrics(vec({3}, {2, 2, 2}), vec({3}, {1, 2, 3}));
  EXPECT_TRUE(std::isnan(m.nrmse));
  EXPECT_TRUE(std::isnan(m.r2));
  EXPECT_DOUBLE_EQ(m.mse, 2.0 / 3.0);
  EXPECT_EQ(capture.messages().size(), 1u);
}

TEST(ErrorMetrics, ShapeMismatchAndEmptyInputsAreArgumentErrors) {
  EXPECT_THROW(error_metrics(vec({2}, {0, 1}), vec({3}, {0, 1, 2})), ArgumentError);
  EXPECT_THROW(error_metrics(Tensor(DType::kFloat64, Shape{0}), Tensor(DType::kFloat64, Shape{0})), ArgumentError);
}

TEST(ErrorMetrics, PowerMeanAndPermutationInvariance) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const Tensor r = noise({3, 4, 5}, rng, -5, 5), p = noise({3, 4, 5}, rng, -5, 5);
    const auto m = error_metrics(r, p);
    EXPECT_NEAR(m.mse, m.rmse * m.rmse, 1e-12);
    EXPECT_LE(m.mae, m.rmse + 1e-15);
    // the same shuffle applied to both inputs
    std::vector<std::size_t> perm(r.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor rs(DType::kFloat64, r.shape()), ps(DType::kFloat64, r.shape());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      rs.values<double>()[i] = r.values<double>()[perm[i]];
      ps.values<double>()[i] = p.values<double>()[perm[i]];
    }
    const auto q = error_metrics(rs, ps);
    EXPECT_NEAR(q.mae, m.mae, 1e-12);
    EXPECT_NEAR(q.r2, m.r2, 1e-12);
    EXPECT_NEAR(psnr(rs, ps), psnr(r, p), 1e-9);
  }
}

TEST(Psnr, IdenticalImagesAreInfinite) {
  const Tensor r = vec({3}, {0, 1, 2});
  EXPECT_EQ(psnr(r, r), std::numeric_limits<double>::infinity());
}

TEST(Psnr, TwentyDecibels) {
  EXPECT_NEAR(psnr(vec({2}, {0, 1}), vec({2}, {0.1, 1.1}), 1.0), 20.0, 1e-9);
  EXPECT_NEAR(psnr(vec({2}, {0, 1}), vec({2}, {0.1, 1.1})), 20.0, 1e-9);
}

TEST(Psnr, ScaleInvariantWithScaledRange) {
  std::mt19937_64 rng(4);
  const Tensor r = noise({10}, rng), p = noise({10}, rng);
  Tensor r2 = r, p2 = p;
  for (auto& v : r2.values<double>()) v *= 2;
  for (auto& v : p2.values<double>()) v *= 2;
  EXPECT_NEAR(psnr(r, p, 1.5), psnr(r2, p2, 3.0), 1e-9);
}

TEST(Psnr, NonPositiveRangeIsAnArgumentError) {
  EXPECT_THROW(psnr(vec({2}, {0, 1}), vec({2}, {1, 1}), 0.0), ArgumentError);
  EXPECT_THROW(psnr(vec({2}, {1, 1}), vec({2}, {0, 1})), ArgumentError);
}

TEST(Ssim, IdenticalImagesGiveOne) {
  std::mt19937_64 rng(7);
  const Tensor r = noise({9, 10}, rng);
  EXPECT_NEAR(ssim(r, r), 1.0, 1e-12);
  const Tensor v = noise({7, 8, 9}, rng);
  EXPECT_NEAR(ssim(v, v), 1.0, 1e-12);
}

TEST(Ssim, InvertedContrastIsNegative) {
  std::mt19937_64 rng(8);
  const Tensor r = noise({12, 12}, rng);
  Tensor p = r;
  const auto rv = r.values<double>();
  const double hi = *std::max_element(rv.begin(), rv.end()), lo = *std::min_element(rv.begin(), rv.end());
  for (auto& v : p.values<double>()) v = -v + hi + lo;
  EXPECT_LT(ssim(r, p), 0.0);
}

TEST(Ssim, MatchesSlidingWindowOracle2D) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const Tensor r = noise({16, 16}, rng);
    Tensor p = r;
    std::normal_distribution<double> n(0, 0.2);
    for (auto& v : p.values<double>()) v += n(rng);
    EXPECT_NEAR(ssim(r, p), ssim_oracle_2d(r, p, range(r)), 1e-7);
    SsimOptions o;
    o.data_range = 2.0;
    EXPECT_NEAR(ssim(r, p, o), ssim_oracle_2d(r, p, 2.0), 1e-7);
  }
}

TEST(Ssim, MatchesSlidingWindowOracle3D) {
  std::mt19937_64 rng(21);
  const Tensor r = noise({8, 9, 10}, rng), p = noise({8, 9, 10}, rng);
  EXPECT_NEAR(ssim(r, p), ssim_oracle_3d(r, p, range(r)), 1e-7);
}

TEST(Ssim, SymmetricWithExplicitRange) {
  std::mt19937_64 rng(5);
  const Tensor a = noise({10, 11}, rng), b = noise({10, 11}, rng);
  SsimOptions o;
  o.data_range = 1.0;
  EXPECT_NEAR(ssim(a, b, o), ssim(b, a, o), 1e-12);
}

TEST(Ssim, SmallExtentIsAnArgumentError) {
  const Tensor t(DType::kFloat64, Shape{6, 20});
  try {
    ssim(t, t);
    FAIL();
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("2-D"), std::string::npos);
  }
}

TEST(Ssim, AcceptsIntegerImages) {
  std::mt19937_64 rng(3);
  Tensor r(DType::kUInt8, Shape{8, 8});
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& v : r.values<std::uint8_t>()) v = std::uint8_t(d(rng));
  EXPECT_NEAR(ssim(r, r), 1.0, 1e-12);
}

}  // namespace
}  // namespace mia
