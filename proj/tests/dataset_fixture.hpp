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

#include <random>
#include <string>

#include "mia/dataset.hpp"
#include "mia/imageio.hpp"
#include "test_util.hpp"

namespace mia::testing {

// Writes `n` synthetic subjects (T1/T2 float32, labels and mask uint8, all
// MetaImage) into `dir` and returns the matching creation plan with the
// numerical (age, GPA) and gender categories held inline.
inline CreationPlan write_subjects(const std::filesystem::path& dir, std::size_t n, const Shape& shape,
                                   std::uint64_t seed = 7, bool compressed = false,
                                   const std::string& ext = ".mha") {
  std::mt19937_64 rng(seed);
  CreationPlan plan;
  ImageGeometry g = ImageGeometry::identity(shape.size());
  for (std::size_t a = 0; a < shape.size(); ++a) g.spacing[a] = 1.0 + 0.5 * static_cast<double>(a);
  for (std::size_t s = 0; s < n; ++s) {
    const std::string id = "Subject_" + std::to_string(s + 1);
    const auto sub = dir / id;
    std::filesystem::create_directories(sub);
    const Tensor t1 = random_tensor(DType::kFloat32, shape, rng);
    const Tensor t2 = random_tensor(DType::kFloat32, shape, rng);
    Tensor labels(DType::kUInt8, shape);
    Tensor mask(DType::kUInt8, shape);
    std::uniform_int_distribution<int> lab(0, 5);
    auto lv = labels.values<std::uint8_t>();
    auto mv = mask.values<std::uint8_t>();
    for (std::size_t i = 0; i < lv.size(); ++i) {
      lv[i] = static_cast<std::uint8_t>(lab(rng));
      mv[i] = lv[i] > 0 ? 1 : 0;
    }
    write_metaimage(t1, g, sub / (id + "_T1" + ext), compressed);
    write_metaimage(t2, g, sub / (id + "_T2" + ext), compressed);
    write_metaimage(labels, g, sub / (id + "_GT" + ext), compressed);
    write_metaimage(mask, g, sub / (id + "_MASK" + ext), compressed);
    std::uniform_real_distribution<double> age(20, 80), gpa(1, 4);
    SubjectPlan sp;
    sp.id = id;
    sp.categories.emplace_back("images", FileList{sub / (id + "_T1" + ext), sub / (id + "_T2" + ext)});
    sp.categories.emplace_back("labels", FileList{sub / (id + "_GT" + ext)});
    sp.categories.emplace_back("mask", FileList{sub / (id + "_MASK" + ext)});
    sp.categories.emplace_back("numerical", InlineValues{DType::kFloat64, {age(rng), gpa(rng)}});
    sp.categories.emplace_back("gender", InlineValues{DType::kUInt8, {static_cast<double>(s % 2)}});
    plan.subjects.push_back(std::move(sp));
  }
  plan.names["images"] = {"T1", "T2"};
  plan.names["labels"] = {"GT"};
  plan.names["mask"] = {"MASK"};
  plan.names["numerical"] = {"AGE", "GPA"};
  plan.names["gender"] = {"GENDER"};
  return plan;
}

}  // namespace mia::testing
