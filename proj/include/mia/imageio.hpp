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
#include <string>

#include "mia/geometry.hpp"
#include "mia/tensor.hpp"

namespace mia {

struct Image {
  Tensor tensor;
  ImageGeometry geometry;
};

// MetaImage (.mha single file, .mhd header + raw payload).
//
// MetaImage stores x fastest; the reader reverses the axis order so that axis
// 0 of the tensor is z. Spacing, origin and direction are reversed the same
// way. A multi-component image gets a trailing channel axis.
//
// Element types: MET_UCHAR -> uint8; MET_CHAR, MET_SHORT, MET_USHORT, MET_INT
// -> int32; MET_FLOAT -> float32; MET_DOUBLE -> float64.
Image read_metaimage(const std::filesystem::path& path);

/// Writes `tensor` with `geometry.ndim()` spatial axes (2 or 3), optionally
/// followed by one channel axis. The payload is zlib-compressed (level 6)
/// when `compressed` is set. For .mhd the payload goes to a sibling .raw
/// (.zraw when compressed) file.
void write_metaimage(const Tensor& tensor, const ImageGeometry& geometry,
                     const std::filesystem::path& path, bool compressed = false);

/// .npy v1.0/v2.0, little-endian, C order only.
Tensor read_npy(const std::filesystem::path& path);
/// Always writes v1.0 with fortran_order False.
void write_npy(const Tensor& tensor, const std::filesystem::path& path);

/// Dispatches on extension (.mha/.mhd/.npy). .npy files get an identity
/// geometry over all tensor axes.
Image read_image(const std::filesystem::path& path);

/// SHA-256 of the file contents, lowercase hex.
std::string hash_file(const std::filesystem::path& path);

}  // namespace mia
