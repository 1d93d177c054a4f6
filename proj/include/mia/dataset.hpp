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

// Chunk-addressable dataset container.
//
// File layout (all integers little-endian):
//
//   offset 0   magic        8 bytes  "MIADS\0\1\0"
//   offset 8   meta_offset  u64      absolute offset of the metadata block
//   offset 16  meta_length  u64      length of the metadata block in bytes
//   offset 24  zero padding up to 64
//   offset 64  data section: raw C-order payloads, each starting at a
//              64-byte aligned offset relative to the data section
//   meta_offset: UTF-8 JSON metadata (sorted keys, no timestamps)
//
// A metadata-only container has an empty data section; its descriptors
// point at the source files, which are loaded on demand.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mia/geometry.hpp"
#include "mia/imageio.hpp"
#include "mia/tensor.hpp"

namespace mia {

inline constexpr char kContainerMagic[8] = {'M', 'I', 'A', 'D', 'S', '\0', '\1', '\0'};
inline constexpr std::uint64_t kContainerHeaderSize = 64;
inline constexpr std::uint64_t kPayloadAlignment = 64;
inline constexpr int kContainerFormatVersion = 1;

enum class PayloadStorage : std::uint8_t {
  kPayload,  // bytes in the data section
  kFiles,    // loaded from source files (metadata container)
  kInline,   // values held in the metadata block (metadata container)
};

struct CategoryDescriptor {
  std::string category;
  std::string subject_id;
  DType dtype = DType::kFloat32;
  Shape shape;
  std::uint64_t byte_offset = 0;
  std::optional<ImageGeometry> geometry;
  PayloadStorage storage = PayloadStorage::kPayload;
  std::vector<std::string> sources;  // kFiles
  std::vector<double> values;        // kInline

  /// Axes addressed by an IndexExpression: the geometry's axes for images
  /// (the trailing channel axis is copied whole), every axis otherwise.
  std::size_t spatial_rank() const { return geometry ? geometry->ndim() : shape.size(); }
  Shape spatial_shape() const {
    return Shape(shape.begin(), shape.begin() + static_cast<std::ptrdiff_t>(spatial_rank()));
  }
  std::uint64_t nbytes() const { return element_count(shape) * dtype_size(dtype); }
};

struct ProvenanceEntry {
  std::string subject_id;
  std::string category;
  std::string source_path;
  std::optional<std::string> sha256;

  friend bool operator==(const ProvenanceEntry&, const ProvenanceEntry&) = default;
};

// ---------------------------------------------------------------------------
// Creation

/// Values stored directly (e.g. age and GPA as float64, gender as uint8).
struct InlineValues {
  DType dtype = DType::kFloat64;
  std::vector<double> values;
};

/// One file per channel, stacked along a trailing channel axis.
using FileList = std::vector<std::filesystem::path>;

using CategorySource = std::variant<FileList, InlineValues>;

struct SubjectPlan {
  std::string id;
  std::vector<std::pair<std::string, CategorySource>> categories;
};

/// Write-time transform applied to the loaded payload of the listed
/// categories before storage. kCustom looks up a transform registered with
/// register_creation_transform (e.g. an anonymisation step).
struct CreationTransform {
  enum class Kind : std::uint8_t { kZNormalize, kRescale, kCustom };
  Kind kind = Kind::kZNormalize;
  std::vector<std::string> categories{"images"};
  double out_min = 0.0;
  double out_max = 1.0;
  std::string name;  // kCustom only
};

using CustomTransformFn = std::function<Tensor(const Tensor&, const ImageGeometry&)>;

/// Registers a named write-time transform. Containers reference it by name,
/// so metadata containers need it registered again before reading.
void register_creation_transform(const std::string& name, CustomTransformFn fn);

struct CreationPlan {
  std::vector<SubjectPlan> subjects;
  /// Channel identifiers per category (e.g. images -> {"T1", "T2"}).
  std::map<std::string, std::vector<std::string>> names;
  /// Optional element-type conversion per file-backed category.
  std::map<std::string, DType> dtypes;
  std::vector<CreationTransform> transforms;
  bool record_hashes = false;
  bool metadata_only = false;
  /// Drop source paths from the metadata (not allowed with metadata_only).
  bool omit_provenance = false;
};

struct ContainerSummary {
  std::size_t subjects = 0;
  std::vector<std::string> categories;
  std::uint64_t payload_bytes = 0;
  std::uint64_t file_bytes = 0;
};

ContainerSummary create_dataset(const CreationPlan& plan, const std::filesystem::path& out_path);

/// create_dataset with metadata_only forced on.
ContainerSummary create_metadata_dataset(CreationPlan plan, const std::filesystem::path& out_path);

// ---------------------------------------------------------------------------
// Reading

struct IoStats {
  std::uint64_t read_calls = 0;
  std::uint64_t bytes_read = 0;
};

/// Open container. Region reads are positioned (pread) and keep no shared
/// cursor, so one handle may serve concurrent readers.
class Dataset {
 public:
  static Dataset open(const std::filesystem::path& path);

  Dataset(Dataset&&) noexcept;
  Dataset& operator=(Dataset&&) noexcept;
  ~Dataset();

  const std::filesystem::path& path() const;
  bool metadata_only() const;
  const std::vector<std::string>& subjects() const;
  std::size_t subject_index(std::string_view subject_id) const;
  /// Categories in order of first appearance.
  std::vector<std::string> categories() const;
  const CategoryDescriptor& descriptor(std::string_view subject_id, std::string_view category) const;
  std::vector<std::string> channel_names(std::string_view category) const;
  const std::vector<ProvenanceEntry>& provenance() const;

  /// Reads a region (or everything, for a full expression). The region must
  /// lie inside the stored shape; padding is the caller's concern.
  Tensor read_region(std::string_view subject_id, std::string_view category,
                     const IndexExpression& expr = IndexExpression::full()) const;

  IoStats io_stats() const;
  void reset_io_stats() const;

  /// The metadata block as pretty-printed JSON.
  std::string metadata_json() const;

 private:
  struct Impl;
  explicit Dataset(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// Tree listing of the container: data/<category>/<subject> entries and the
/// meta/{subjects,files,info,names,shape} groups.
std::string inspect(const Dataset& dataset);

}  // namespace mia
