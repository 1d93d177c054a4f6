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

#include "mia/tensor.hpp"

#include <algorithm>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>

namespace mia {

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::kUInt8: return 1;
    case DType::kInt32: return 4;
    case DType::kFloat32: return 4;
    case DType::kFloat64: return 8;
  }
  throw ArgumentError("invalid dtype tag");
}

std::string_view dtype_name(DType dtype) {
  switch (dtype) {
    case DType::kUInt8: return "uint8";
    case DType::kInt32: return "int32";
    case DType::kFloat32: return "float32";
    case DType::kFloat64: return "float64";
  }
  throw ArgumentError("invalid dtype tag");
}

DType parse_dtype(std::string_view name) {
  if (name == "uint8") return DType::kUInt8;
  if (name == "int32") return DType::kInt32;
  if (name == "float32") return DType::kFloat32;
  if (name == "float64") return DType::kFloat64;
  throw ArgumentError("unknown dtype '" + std::string(name) + "'");
}

std::size_t element_count(std::span<const std::size_t> shape) {
  if (shape.empty()) return 0;
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(std::span<const std::size_t> shape) {
  std::ostringstream os;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  return os.str();
}

std::size_t linear_offset(std::span<const std::size_t> shape,
                          std::span<const std::size_t> index) {
  if (index.size() != shape.size()) {
    throw RangeError("index rank " + std::to_string(index.size()) + " does not match shape rank " +
                     std::to_string(shape.size()));
  }
  std::size_t offset = 0;
  for (std::size_t a = 0; a < shape.size(); ++a) {
    if (index[a] >= shape[a]) {
      throw RangeError("index " + std::to_string(index[a]) + " out of bounds for axis " +
                       std::to_string(a) + " with extent " + std::to_string(shape[a]));
    }
    offset = offset * shape[a] + index[a];
  }
  return offset;
}

// ---------------------------------------------------------------------------
// Tensor

namespace {

Tensor::Storage make_storage(DType dtype, std::size_t n) {
  switch (dtype) {
    case DType::kUInt8: return std::vector<std::uint8_t>(n);
    case DType::kInt32: return std::vector<std::int32_t>(n);
    case DType::kFloat32: return std::vector<float>(n);
    case DType::kFloat64: return std::vector<double>(n);
  }
  throw ArgumentError("invalid dtype tag");
}

}  // namespace

Tensor::Tensor(DType dtype, Shape shape)
    : shape_(std::move(shape)), storage_(make_storage(dtype, element_count(shape_))) {
  check_invariants();
}

std::size_t Tensor::size() const { return element_count(shape_); }

void Tensor::check_invariants() const {
  if (shape_.empty() || shape_.size() > kMaxRank) {
    throw ArgumentError("tensor rank must be 1.." + std::to_string(kMaxRank) + ", got " +
                        std::to_string(shape_.size()));
  }
  for (auto extent : shape_) {
    if (extent == 0) throw ArgumentError("tensor extents must be positive: " + shape_to_string(shape_));
  }
  const std::size_t n = std::visit([](const auto& v) { return v.size(); }, storage_);
  if (n != element_count(shape_)) {
    throw ArgumentError("element count " + std::to_string(n) + " does not match shape " +
                        shape_to_string(shape_));
  }
}

void Tensor::check_dtype(DType requested) const {
  if (requested != dtype()) {
    throw ArgumentError("tensor holds " + std::string(dtype_name(dtype())) + ", requested " +
                        std::string(dtype_name(requested)));
  }
}

std::span<const std::byte> Tensor::bytes() const {
  return std::visit([](const auto& v) { return std::as_bytes(std::span(v)); }, storage_);
}

std::span<std::byte> Tensor::bytes() {
  return std::visit([](auto& v) { return std::as_writable_bytes(std::span(v)); }, storage_);
}

Tensor Tensor::astype(DType target) const {
  if (target == dtype()) return *this;
  Tensor out(target, shape_);
  visit([&](auto src) {
    out.visit([&](auto dst) {
      using D = typename decltype(dst)::value_type;
      std::transform(src.begin(), src.end(), dst.begin(), [](auto x) { return static_cast<D>(x); });
    });
  });
  return out;
}

std::vector<double> Tensor::to_doubles() const {
  return visit([](auto src) { return std::vector<double>(src.begin(), src.end()); });
}

Tensor Tensor::reshaped(Shape shape) const& {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
  if (element_count(shape) != size()) {
    throw ArgumentError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  }
  shape_ = std::move(shape);
  check_invariants();
  return std::move(*this);
}

bool operator==(const Tensor& a, const Tensor& b) {
  if (a.dtype() != b.dtype() || a.shape() != b.shape()) return false;
  auto x = a.bytes();
  auto y = b.bytes();
  return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size()) == 0;
}

std::string_view pad_mode_name(PadMode mode) {
  return mode == PadMode::kZero ? "zero" : "mirror";
}

PadMode parse_pad_mode(std::string_view name) {
  if (name == "zero" || name == "constant") return PadMode::kZero;
  if (name == "mirror" || name == "symmetric") return PadMode::kMirror;
  throw ArgumentError("unknown pad mode '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Region copies

namespace {

struct RegionLayout {
  std::size_t spatial_rank = 0;
  std::size_t unit_bytes = 0;          // bytes per spatial position (channels * element)
  std::vector<std::size_t> strides;    // source strides in spatial positions
};

RegionLayout layout_for(const Tensor& t, std::size_t covered_axes) {
  if (covered_axes != t.rank() && covered_axes + 1 != t.rank()) {
    throw ArgumentError("region covers " + std::to_string(covered_axes) + " axes of a rank-" +
                        std::to_string(t.rank()) + " tensor");
  }
  RegionLayout l;
  l.spatial_rank = covered_axes;
  const std::size_t channels = covered_axes == t.rank() ? 1 : t.shape().back();
  l.unit_bytes = channels * dtype_size(t.dtype());
  l.strides.assign(covered_axes, 1);
  for (std::size_t a = covered_axes; a-- > 1;) l.strides[a - 1] = l.strides[a] * t.shape()[a];
  return l;
}

std::int64_t mirror_index(std::int64_t idx, std::int64_t extent) {
  const std::int64_t period = 2 * extent;
  std::int64_t m = ((idx % period) + period) % period;
  return m >= extent ? period - 1 - m : m;
}

// Visits every row along the last covered axis in C order. `fn(outer)`
// receives the index vector for all but the last covered axis.
template <typename Fn>
void for_each_row(std::span<const std::size_t> extents, Fn&& fn) {
  const std::size_t outer = extents.size() - 1;
  std::vector<std::size_t> idx(outer, 0);
  for (;;) {
    fn(std::span<const std::size_t>(idx));
    std::size_t a = outer;
    for (;;) {
      if (a == 0) return;
      --a;
      if (++idx[a] < extents[a]) break;
      idx[a] = 0;
    }
  }
}

}  // namespace

Tensor extract_subtensor(const Tensor& source, std::span<const std::int64_t> start,
                         std::span<const std::size_t> size, PadMode pad) {
  if (start.size() != size.size()) throw ArgumentError("start and size ranks differ");
  for (auto s : size) {
    if (s == 0) throw ArgumentError("extraction size must be >= 1 along every axis");
  }
  const RegionLayout l = layout_for(source, start.size());
  if (l.spatial_rank == 0) return source;

  // Per-axis source index for every output position, -1 where zero-padded.
  std::vector<std::vector<std::int64_t>> maps(l.spatial_rank);
  for (std::size_t a = 0; a < l.spatial_rank; ++a) {
    maps[a] = axis_index_map(start[a], size[a], source.shape()[a], pad);
  }
  return gather_subtensor(source, maps);
}

std::vector<std::int64_t> axis_index_map(std::int64_t start, std::size_t size, std::size_t extent,
                                         PadMode pad) {
  std::vector<std::int64_t> map(size);
  const auto e = static_cast<std::int64_t>(extent);
  for (std::size_t i = 0; i < size; ++i) {
    const std::int64_t idx = start + static_cast<std::int64_t>(i);
    if (idx >= 0 && idx < e) {
      map[i] = idx;
    } else {
      map[i] = pad == PadMode::kMirror ? mirror_index(idx, e) : -1;
    }
  }
  return map;
}

Tensor gather_subtensor(const Tensor& source, std::span<const std::vector<std::int64_t>> maps) {
  const RegionLayout l = layout_for(source, maps.size());
  if (l.spatial_rank == 0) return source;
  Shape out_shape;
  for (std::size_t a = 0; a < maps.size(); ++a) {
    if (maps[a].empty()) throw ArgumentError("extraction size must be >= 1 along every axis");
    for (auto v : maps[a]) {
      if (v >= static_cast<std::int64_t>(source.shape()[a])) throw RangeError("gather index out of bounds");
    }
    out_shape.push_back(maps[a].size());
  }
  const Shape size = out_shape;
  if (l.spatial_rank < source.rank()) out_shape.push_back(source.shape().back());
  Tensor out(source.dtype(), out_shape);

  const auto src = source.bytes();
  auto dst = out.bytes();
  const std::size_t last = l.spatial_rank - 1;
  const auto& last_map = maps[last];
  std::size_t out_row = 0;
  const std::size_t row_bytes = size[last] * l.unit_bytes;
  for_each_row(size, [&](std::span<const std::size_t> outer) {
    std::int64_t base = 0;
    bool valid = true;
    for (std::size_t a = 0; a < last; ++a) {
      const std::int64_t s = maps[a][outer[a]];
      if (s < 0) {
        valid = false;
        break;
      }
      base += s * static_cast<std::int64_t>(l.strides[a]);
    }
    std::byte* row = dst.data() + out_row * row_bytes;
    ++out_row;
    if (!valid) return;
    std::size_t i = 0;
    while (i < last_map.size()) {
      if (last_map[i] < 0) {
        ++i;
        continue;
      }
      std::size_t j = i + 1;
      while (j < last_map.size() && last_map[j] == last_map[j - 1] + 1) ++j;
      const auto offset = static_cast<std::size_t>(base + last_map[i]) * l.unit_bytes;
      std::memcpy(row + i * l.unit_bytes, src.data() + offset, (j - i) * l.unit_bytes);
      i = j;
    }
  });
  return out;
}

void insert_subtensor(Tensor& target, const Tensor& patch, std::span<const std::int64_t> start) {
  if (target.dtype() != patch.dtype()) throw ArgumentError("insert_subtensor: dtype mismatch");
  const RegionLayout l = layout_for(target, start.size());
  if (patch.rank() != target.rank()) throw ArgumentError("insert_subtensor: rank mismatch");
  if (l.spatial_rank < target.rank() && patch.shape().back() != target.shape().back()) {
    throw ArgumentError("insert_subtensor: channel count mismatch");
  }
  if (l.spatial_rank == 0) {
    target = patch;
    return;
  }
  std::span<const std::size_t> extents(patch.shape().data(), l.spatial_rank);
  const std::size_t last = l.spatial_rank - 1;
  const auto src = patch.bytes();
  auto dst = target.bytes();

  // Clip the last axis once; it is the same for every row.
  const auto t_last = static_cast<std::int64_t>(target.shape()[last]);
  const std::int64_t lo = std::max<std::int64_t>(0, -start[last]);
  const std::int64_t hi =
      std::min<std::int64_t>(static_cast<std::int64_t>(extents[last]), t_last - start[last]);
  if (hi <= lo) return;
  const std::size_t row_bytes = extents[last] * l.unit_bytes;
  std::size_t in_row = 0;
  for_each_row(extents, [&](std::span<const std::size_t> outer) {
    const std::byte* row = src.data() + in_row * row_bytes;
    ++in_row;
    std::int64_t base = 0;
    for (std::size_t a = 0; a < last; ++a) {
      const std::int64_t t = start[a] + static_cast<std::int64_t>(outer[a]);
      if (t < 0 || t >= static_cast<std::int64_t>(target.shape()[a])) return;
      base += t * static_cast<std::int64_t>(l.strides[a]);
    }
    const auto offset = static_cast<std::size_t>(base + start[last] + lo) * l.unit_bytes;
    std::memcpy(dst.data() + offset, row + static_cast<std::size_t>(lo) * l.unit_bytes,
                static_cast<std::size_t>(hi - lo) * l.unit_bytes);
  });
}

Tensor stack_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw ArgumentError("stack_channels: nothing to stack");
  const Tensor& first = parts.front();
  for (const auto& p : parts) {
    if (p.dtype() != first.dtype() || p.shape() != first.shape()) {
      throw ArgumentError("stack_channels: parts differ in dtype or shape (" +
                          shape_to_string(first.shape()) + " vs " + shape_to_string(p.shape()) + ")");
    }
  }
  Shape shape = first.shape();
  shape.push_back(parts.size());
  Tensor out(first.dtype(), shape);
  const std::size_t k = parts.size();
  out.visit([&](auto dst) {
    using T = typename decltype(dst)::value_type;
    for (std::size_t c = 0; c < k; ++c) {
      const auto src = parts[c].values<T>();
      T* d = dst.data() + c;
      for (std::size_t i = 0; i < src.size(); ++i, d += k) *d = src[i];
    }
  });
  return out;
}

}  // namespace mia
