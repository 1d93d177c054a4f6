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
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mia/dataset.hpp"
#include "mia/geometry.hpp"
#include "mia/tensor.hpp"

namespace mia {

// ---------------------------------------------------------------------------
// Indexing

struct IndexingStrategy {
  enum class Kind : std::uint8_t { kEmpty, kSlice, kPatch, kPaddedPatch };
  Kind kind = Kind::kEmpty;
  std::size_t axis = 0;        // kSlice
  Shape shape;                 // kPatch: patch shape; kPaddedPatch: core shape
  Shape step;                  // grid step, empty means `shape`
  std::vector<std::size_t> pad;  // kPaddedPatch: extra voxels on every side

  static IndexingStrategy empty() { return {}; }
  static IndexingStrategy slice(std::size_t axis);
  static IndexingStrategy patch(Shape shape, Shape step = {});
  static IndexingStrategy padded_patch(Shape core, std::vector<std::size_t> pad, Shape step = {});
};

std::string describe(const IndexingStrategy& strategy);

struct SampleSpec {
  std::size_t sample_index = 0;
  std::size_t subject_index = 0;
  /// Region read for the sample; larger than `core` for padded patches and
  /// possibly reaching outside the image.
  IndexExpression expr;
  /// Region the sample stands for (what assembly writes back).
  IndexExpression core;
  /// Slice axis for plane-wise (2.5-D) bookkeeping.
  std::optional<std::size_t> plane;
  /// Some part of `expr` lies outside the image.
  bool padded = false;
};

/// Builds the sample table over subjects with the given spatial shapes, in
/// subject-major order. Grid tiling uses ceil division: per axis
/// ceil(max(E - S, 0) / step) + 1 positions at multiples of step.
std::vector<SampleSpec> build_index(const std::vector<Shape>& shapes, const IndexingStrategy& strategy);

// ---------------------------------------------------------------------------
// Extraction

struct ExtractorSpec {
  enum class Kind : std::uint8_t { kData, kSelective, kPad, kSubjectId, kGeometry, kShape, kNames };
  Kind kind = Kind::kData;
  /// Data category (kData, kSelective, kGeometry, kNames; kPad takes the
  /// inner extractor's).
  std::string category = "images";
  std::vector<std::string> channels;  // kSelective
  std::shared_ptr<const ExtractorSpec> inner;  // kPad
  PadMode pad_mode = PadMode::kZero;  // kPad
  /// kPad: voxels added on every side of the sample region, per axis.
  std::vector<std::size_t> extra_pad;
  /// Key in the sample; empty means the default (the category for data
  /// extractors, otherwise "subject_id", "geometry", "shape", "names").
  std::string key;

  static ExtractorSpec data(std::string category);
  static ExtractorSpec selective(std::string category, std::vector<std::string> channels);
  static ExtractorSpec pad(ExtractorSpec inner, PadMode mode, std::vector<std::size_t> extra = {});
  static ExtractorSpec subject_id();
  static ExtractorSpec geometry(std::string category = "images");
  static ExtractorSpec shape();
  static ExtractorSpec names(std::string category = "images");

  std::string output_key() const;
};

// ---------------------------------------------------------------------------
// Sample transforms, applied in order after extraction.

struct SampleTransform {
  enum class Kind : std::uint8_t { kZNormalize, kRescale, kApplyMask, kRandomFlip, kPermuteChannelsFirst };
  Kind kind = Kind::kZNormalize;
  /// Sample keys the transform touches.
  std::vector<std::string> keys{"images"};
  double out_min = 0.0;  // kRescale
  double out_max = 1.0;
  std::string mask_key = "mask";  // kApplyMask
  std::vector<std::size_t> axes;  // kRandomFlip (spatial axes)
  double probability = 0.5;
  std::uint64_t seed = 0;

  static SampleTransform znormalize(std::vector<std::string> keys = {"images"});
  static SampleTransform rescale(double out_min, double out_max, std::vector<std::string> keys = {"images"});
  static SampleTransform apply_mask(std::string mask_key = "mask", std::vector<std::string> keys = {"images"});
  static SampleTransform random_flip(std::vector<std::size_t> axes, double probability, std::uint64_t seed,
                                     std::vector<std::string> keys = {"images", "labels"});
  static SampleTransform permute_channels_first(std::vector<std::string> keys = {"images"});
};

/// Per-sample generator state for randomized transforms: a SplitMix64
/// stream seeded from (seed, sample_index).
std::uint64_t sample_seed(std::uint64_t seed, std::size_t sample_index);

// ---------------------------------------------------------------------------
// Datasource

using SampleValue = std::variant<Tensor, std::string, ImageGeometry, Shape, std::vector<std::string>>;

struct Sample {
  std::size_t index = 0;
  std::size_t subject_index = 0;
  std::map<std::string, SampleValue> entries;

  const Tensor& tensor(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  bool contains(const std::string& key) const { return entries.count(key) != 0; }
};

struct DatasourceConfig {
  IndexingStrategy strategy;
  std::vector<ExtractorSpec> extractors{ExtractorSpec::data("images")};
  std::vector<SampleTransform> transforms;
  /// Subset of subject ids in dataset order; empty selects all.
  std::vector<std::string> subjects;
  /// Category whose spatial shape defines the index table.
  std::string reference_category = "images";
};

/// Indexed, immutable view of a dataset. get_sample may be called
/// concurrently.
class Datasource {
 public:
  Datasource(std::shared_ptr<const Dataset> dataset, DatasourceConfig config);

  static Datasource from_container(const std::filesystem::path& path, DatasourceConfig config);
  /// Backed by a metadata container: payloads come from the source files
  /// on every access.
  static Datasource from_filesystem(const std::filesystem::path& metadata_path, DatasourceConfig config);

  std::size_t size() const { return specs_.size(); }
  const SampleSpec& spec(std::size_t sample_index) const;
  const std::vector<SampleSpec>& specs() const { return specs_; }
  const std::vector<std::string>& subject_ids() const { return subjects_; }
  const Shape& subject_shape(std::size_t subject_index) const { return shapes_.at(subject_index); }
  const Dataset& dataset() const { return *dataset_; }
  const DatasourceConfig& config() const { return config_; }

  Sample get_sample(std::size_t sample_index) const;

 private:
  Tensor read_padded(const std::string& subject, const std::string& category, const IndexExpression& region,
                     PadMode mode) const;

  std::shared_ptr<const Dataset> dataset_;
  DatasourceConfig config_;
  std::vector<std::string> subjects_;
  std::vector<Shape> shapes_;
  std::vector<SampleSpec> specs_;
};

}  // namespace mia
