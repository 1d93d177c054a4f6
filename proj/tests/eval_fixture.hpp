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

#include <fstream>
#include <random>
#include <string>

#include "mia/evaluation.hpp"
#include "mia/imageio.hpp"

namespace mia::testing {

inline const std::vector<std::pair<std::int64_t, std::string>> kFixtureLabels{
    {1, "WhiteMatter"}, {2, "GreyMatter"}, {3, "Hippocampus"}, {4, "Amygdala"}, {5, "Thalamus"}};

// Label volume of five spheres; the prediction jitters every centre by up
// to one voxel and every radius by up to one voxel.
inline Tensor sphere_labels(const Shape& shape, std::mt19937_64& rng, bool jitter) {
  Tensor t(DType::kUInt8, shape);
  auto v = t.values<std::uint8_t>();
  std::uniform_int_distribution<int> j(-1, 1);
  const double base[5][4] = {{0.5, 0.5, 0.5, 0.35}, {0.3, 0.3, 0.3, 0.2}, {0.7, 0.35, 0.6, 0.15},
                             {0.35, 0.7, 0.7, 0.12}, {0.65, 0.65, 0.3, 0.1}};
  for (int k = 0; k < 5; ++k) {
    double c[3], r = base[k][3] * double(std::min({shape[0], shape[1], shape[2]}));
    for (int a = 0; a < 3; ++a) c[a] = base[k][a] * double(shape[a]) + (jitter ? j(rng) : 0);
    if (jitter) r += j(rng);
    for (std::size_t z = 0; z < shape[0]; ++z)
      for (std::size_t y = 0; y < shape[1]; ++y)
        for (std::size_t x = 0; x < shape[2]; ++x) {
          const double dz = double(z) - c[0], dy = double(y) - c[1], dx = double(x) - c[2];
          if (dz * dz + dy * dy + dx * dx <= r * r) v[(z * shape[1] + y) * shape[2] + x] = std::uint8_t(k + 1);
        }
  }
  return t;
}

// ref/Subject_k.mha, pred/Subject_k.mha and labels.txt under `dir`.
inline void write_evaluation_fixture(const std::filesystem::path& dir, std::size_t subjects = 4,
                                     const Shape& shape = {24, 28, 32}, std::uint64_t seed = 2024) {
  std::filesystem::create_directories(dir / "ref");
  std::filesystem::create_directories(dir / "pred");
  std::mt19937_64 rng(seed);
  const auto g = ImageGeometry::with_spacing({2.0, 1.0, 1.0});
  for (std::size_t s = 0; s < subjects; ++s) {
    const std::string id = "Subject_" + std::to_string(s + 1);
    write_metaimage(sphere_labels(shape, rng, false), g, dir / "ref" / (id + ".mha"));
    write_metaimage(sphere_labels(shape, rng, true), g, dir / "pred" / (id + ".mha"));
  }
  std::ofstream f(dir / "labels.txt");
  for (const auto& [k, name] : kFixtureLabels) f << k << '\t' << name << '\n';
}

}  // namespace mia::testing
