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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "mia/error.hpp"

namespace mia {

enum class DType : std::uint8_t { kUInt8, kInt32, kFloat32, kFloat64 };

std::size_t dtype_size(DType dtype);
std::string_view dtype_name(DType dtype);
/// Accepts the names produced by dtype_name ("uint8", "int32", ...).
DType parse_dtype(std::string_view name);

template <typename T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, std::uint8_t>) {
    return DType::kUInt8;
  } else if constexpr (std::is_same_v<T, std::int32_t>) {
    return DType::kInt32;
  } else if constexpr (std::is_same_v<T, float>) {
    return DType::kFloat32;
  } else {
    static_assert(std::is_same_v<T, double>, "unsupported element type");
    return DType::kFloat64;
  }
}

/// Extents, slowest-varying axis first (C order).
using Shape = std::vector<std::size_t>;

inline constexpr std::size_t kMaxRank = 5;

std::size_t element_count(std::span<const std::size_t> shape);
std::string shape_to_string(std::span<const std::size_t> shape);

/// C-order flat offset of `index` in `shape`. Throws RangeError when the
/// index is out of bounds or has the wrong rank.
std::size_t linear_offset(std::span<const std::size_t> shape,
                          std::span<const std::size_t> index);

/// n-dimensional array with one of four element types. The element buffer is
/// contiguous and C-ordered; rank is 1..kMaxRank.
class Tensor {
 public:
  using Storage = std::variant<std::vector<std::uint8_t>, std::vector<std::int32_t>,
                               std::vector<float>, std::vector<double>>;

  /// Placeholder with no shape; not a valid tensor until assigned.
  Tensor() = default;

  /// Zero-filled tensor.
  Tensor(DType dtype, Shape shape);

  template <typename T>
  Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), storage_(std::move(values)) {
    check_invariants();
  }

  DType dtype() const { return static_cast<DType>(storage_.index()); }
  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const;
  std::size_t nbytes() const { return size() * dtype_size(dtype()); }
  bool empty() const { return shape_.empty(); }

  template <typename T>
  std::span<const T> values() const {
    check_dtype(dtype_of<T>());
    return std::get<std::vector<T>>(storage_);
  }

  template <typename T>
  std::span<T> values() {
    check_dtype(dtype_of<T>());
    return std::get<std::vector<T>>(storage_);
  }

  std::span<const std::byte> bytes() const;
  std::span<std::byte> bytes();

  /// Calls f with a std::span<const T> over the elements.
  template <typename F>
  decltype(auto) visit(F&& f) const {
    return std::visit([&](const auto& v) -> decltype(auto) {
      using T = typename std::decay_t<decltype(v)>::value_type;
      return f(std::span<const T>(v));
    }, storage_);
  }

  template <typename F>
  decltype(auto) visit(F&& f) {
    return std::visit([&](auto& v) -> decltype(auto) {
      using T = typename std::decay_t<decltype(v)>::value_type;
      return f(std::span<T>(v));
    }, storage_);
  }

  /// Element-wise conversion (static_cast semantics).
  Tensor astype(DType dtype) const;
  /// Copy of the elements as float64.
  std::vector<double> to_doubles() const;

  /// Same elements under a new shape with equal element count.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  /// Bitwise equality of dtype, shape and element bytes.
  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  void check_invariants() const;
  void check_dtype(DType requested) const;

  Shape shape_;
  Storage storage_;
};

enum class PadMode : std::uint8_t {
  kZero,
  /// Symmetric reflection including the edge sample: ... 1 0 | 0 1 2 ...
  kMirror,
};

std::string_view pad_mode_name(PadMode mode);
PadMode parse_pad_mode(std::string_view name);

/// Copies the box [start, start+size) out of `source`. `start`/`size` cover
/// either every axis or every axis but the last; in the latter case the
/// trailing (channel) axis is copied whole. Elements outside the source are
/// filled according to `pad`.
Tensor extract_subtensor(const Tensor& source, std::span<const std::int64_t> start,
                         std::span<const std::size_t> size, PadMode pad = PadMode::kZero);

/// Source index along one axis for each of `size` positions starting at
/// `start`; -1 marks zero padding.
std::vector<std::int64_t> axis_index_map(std::int64_t start, std::size_t size, std::size_t extent,
                                         PadMode pad);

/// General form of extract_subtensor: output position i along axis a comes
/// from source index maps[a][i] (-1 gives zero).
Tensor gather_subtensor(const Tensor& source, std::span<const std::vector<std::int64_t>> maps);

/// Writes `patch` into `target` with its origin at `start`; parts of the
/// patch that fall outside the target are dropped. Axis coverage follows the
/// same rule as extract_subtensor. Dtypes must match.
void insert_subtensor(Tensor& target, const Tensor& patch, std::span<const std::int64_t> start);

/// Stacks tensors of identical shape and dtype along a new trailing axis.
Tensor stack_channels(std::span<const Tensor> parts);

}  // namespace mia
