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

#include <array>
#include <memory>
#include <vector>

#include "mia/access.hpp"
#include "mia/tensor.hpp"

namespace mia {

// Collects per-sample predictions back into subject volumes. Each subject's
// accumulator is guarded by its own mutex, so add_prediction may be called
// concurrently from several threads.
//
// Predictions carry the core region of their spec, optionally followed by a
// channel axis (absent means one channel). A prediction the size of the
// padded read region is cropped to the core first. Contributions are summed
// in float64 with a per-voxel weight; assemble returns sum / weight as
// float32.
class Assembler {
 public:
  Assembler(std::vector<SampleSpec> specs, std::vector<Shape> subject_shapes);
  explicit Assembler(const Datasource& source);
  ~Assembler();
  Assembler(Assembler&&) noexcept;
  Assembler& operator=(Assembler&&) noexcept;

  void add_prediction(const SampleSpec& spec, const Tensor& prediction);
  void add_prediction(std::size_t sample_index, const Tensor& prediction);

  std::size_t subject_count() const;
  bool is_complete(std::size_t subject_index) const;
  /// Sample indices of the subject not yet submitted.
  std::vector<std::size_t> missing(std::size_t subject_index) const;

  /// Accumulated contribution count per voxel (float64, spatial shape).
  Tensor weights(std::size_t subject_index) const;

  /// Throws NotReadyError while samples are missing.
  Tensor assemble(std::size_t subject_index) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Voxel-wise mean of three per-plane assemblies of one subject.
Tensor plane_assemble(const std::array<const Assembler*, 3>& planes, std::size_t subject_index);

}  // namespace mia
