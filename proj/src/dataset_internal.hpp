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

#include <filesystem>
#include <optional>
#include <span>
#include <string_view>

#include "mia/dataset.hpp"
#include "mia/error.hpp"

namespace mia::detail {

bool has_transforms_for(std::span<const CreationTransform> transforms, std::string_view category);

/// Joins per-file tensors along the channel axis. Parts with `spatial_rank`
/// axes count as one channel; parts with one extra axis contribute theirs.
Tensor concat_channels(std::span<const Tensor> parts, std::size_t spatial_rank);

/// Reads one file-backed category: load every channel file, stack, cast and
/// apply the write-time transforms. With a region and no applicable
/// transforms each file is cropped before stacking.
Image load_file_category(std::string_view category, std::span<const std::filesystem::path> files,
                         std::optional<DType> cast, std::span<const CreationTransform> transforms,
                         const IndexExpression* region);

}  // namespace mia::detail
