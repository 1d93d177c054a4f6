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

#include "mia/assembly.hpp"

#include <mutex>
#include <string>

#include "mia/error.hpp"

namespace mia {

struct Assembler::Impl {
  struct Subject {
    mutable std::mutex mutex;
    Shape shape;
    std::vector<std::size_t> expected;  // sample indices
    std::vector<bool> seen;             // parallel to expected
    std::size_t received = 0;
    std::size_t channels = 0;           // 0 until the first prediction
    std::vector<double> sum;
    std::vector<double> weight;
  };

  std::vector<SampleSpec> specs;
  std::vector<std::unique_ptr<Subject>> subjects;
  std::vector<std::size_t> slot;  // position of each sample within its subject's list
};

Assembler::Assembler(std::vector<SampleSpec> specs, std::vector<Shape> shapes) : impl_(std::make_unique<Impl>()) {
  for (auto& s : shapes) {
    auto sub = std::make_unique<Impl::Subject>();
    sub->shape = std::move(s);
    impl_->subjects.push_back(std::move(sub));
  }
  impl_->slot.resize(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].sample_index != i) throw ArgumentError("sample specs must be dense and ordered");
    if (specs[i].subject_index >= impl_->subjects.size()) {
      throw ArgumentError("sample " + std::to_string(i) + " refers to an unknown subject");
    }
    auto& sub = *impl_->subjects[specs[i].subject_index];
    impl_->slot[i] = sub.expected.size();
    sub.expected.push_back(i);
    sub.seen.push_back(false);
  }
  impl_->specs = std::move(specs);
}

Assembler::Assembler(const Datasource& source) : Assembler(source.specs(), [&] {
  std::vector<Shape> shapes;
  for (std::size_t i = 0; i < source.subject_ids().size(); ++i) shapes.push_back(source.subject_shape(i));
  return shapes;
}()) {}

Assembler::~Assembler() = default;
Assembler::Assembler(Assembler&&) noexcept = default;
Assembler& Assembler::operator=(Assembler&&) noexcept = default;

std::size_t Assembler::subject_count() const { return impl_->subjects.size(); }

void Assembler::add_prediction(std::size_t sample_index, const Tensor& prediction) {
  if (sample_index >= impl_->specs.size()) {
    throw RangeError("sample index " + std::to_string(sample_index) + " out of range");
  }
  add_prediction(impl_->specs[sample_index], prediction);
}

void Assembler::add_prediction(const SampleSpec& spec, const Tensor& prediction) {
  const std::size_t idx = spec.sample_index;
  if (idx >= impl_->specs.size() || impl_->specs[idx].subject_index != spec.subject_index) {
    throw AssemblyError("sample " + std::to_string(idx) + " does not belong to this assembler");
  }
  auto& sub = *impl_->subjects[spec.subject_index];
  const std::size_t rank = sub.shape.size();
  const std::string where = "sample " + std::to_string(idx);

  IndexExpression core = spec.core;
  if (core.is_full()) {
    core.start.assign(rank, 0);
    core.size = sub.shape;
  }
  IndexExpression expr = spec.expr.is_full() ? core : spec.expr;

  if (prediction.rank() != rank && prediction.rank() != rank + 1) {
    throw AssemblyError(where + ": prediction rank " + std::to_string(prediction.rank()) +
                        " does not fit spatial rank " + std::to_string(rank));
  }
  const Shape spatial(prediction.shape().begin(), prediction.shape().begin() + static_cast<std::ptrdiff_t>(rank));
  const std::size_t channels = prediction.rank() == rank ? 1 : prediction.shape().back();

  Tensor pred = prediction.rank() == rank ? prediction.reshaped([&] {
    Shape s = spatial;
    s.push_back(1);
    return s;
  }()) : prediction;
  if (spatial != core.size) {
    if (spatial != expr.size) {
      throw AssemblyError(where + ": prediction shape " + shape_to_string(prediction.shape()) +
                          " matches neither the core region " + shape_to_string(core.size) +
                          " nor the read region " + shape_to_string(expr.size));
    }
    std::vector<std::int64_t> offset(rank);
    for (std::size_t a = 0; a < rank; ++a) offset[a] = core.start[a] - expr.start[a];
    pred = extract_subtensor(pred, offset, core.size);
  }
  const std::vector<double> values = pred.to_doubles();

  std::lock_guard lock(sub.mutex);
  if (sub.channels == 0) {
    sub.channels = channels;
    sub.sum.assign(element_count(sub.shape) * channels, 0.0);
    sub.weight.assign(element_count(sub.shape), 0.0);
  } else if (sub.channels != channels) {
    throw AssemblyError(where + ": " + std::to_string(channels) + " channels, earlier predictions had " +
                        std::to_string(sub.channels));
  }

  // Clip the core to the image and accumulate row by row.
  std::vector<std::size_t> strides(rank, 1);
  for (std::size_t a = rank - 1; a-- > 0;) strides[a] = strides[a + 1] * sub.shape[a + 1];
  std::vector<std::size_t> pstrides(rank, 1);
  for (std::size_t a = rank - 1; a-- > 0;) pstrides[a] = pstrides[a + 1] * core.size[a + 1];
  std::vector<std::int64_t> lo(rank), hi(rank);
  bool inside = true;
  for (std::size_t a = 0; a < rank; ++a) {
    lo[a] = std::max<std::int64_t>(0, -core.start[a]);
    hi[a] = std::min<std::int64_t>(static_cast<std::int64_t>(core.size[a]),
                                   static_cast<std::int64_t>(sub.shape[a]) - core.start[a]);
    inside = inside && hi[a] > lo[a];
  }
  if (inside) {
    std::vector<std::int64_t> i(lo.begin(), lo.end());
    const std::size_t last = rank - 1;
    for (;;) {
      std::size_t t = 0, p = 0;
      for (std::size_t a = 0; a < last; ++a) {
        t += static_cast<std::size_t>(core.start[a] + i[a]) * strides[a];
        p += static_cast<std::size_t>(i[a]) * pstrides[a];
      }
      for (std::int64_t x = lo[last]; x < hi[last]; ++x) {
        const std::size_t tv = t + static_cast<std::size_t>(core.start[last] + x);
        const std::size_t pv = p + static_cast<std::size_t>(x);
        sub.weight[tv] += 1.0;
        for (std::size_t c = 0; c < channels; ++c) sub.sum[tv * channels + c] += values[pv * channels + c];
      }
      std::size_t a = last;
      bool finished = true;
      while (a-- > 0) {
        if (++i[a] < hi[a]) {
          finished = false;
          break;
        }
        i[a] = lo[a];
      }
      if (finished) break;
    }
  }
  const std::size_t s = impl_->slot[idx];
  if (!sub.seen[s]) {
    sub.seen[s] = true;
    ++sub.received;
  }
}

bool Assembler::is_complete(std::size_t subject_index) const {
  const auto& sub = *impl_->subjects.at(subject_index);
  std::lock_guard lock(sub.mutex);
  return sub.received == sub.expected.size();
}

std::vector<std::size_t> Assembler::missing(std::size_t subject_index) const {
  const auto& sub = *impl_->subjects.at(subject_index);
  std::lock_guard lock(sub.mutex);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < sub.expected.size(); ++k) {
    if (!sub.seen[k]) out.push_back(sub.expected[k]);
  }
  return out;
}

Tensor Assembler::weights(std::size_t subject_index) const {
  const auto& sub = *impl_->subjects.at(subject_index);
  std::lock_guard lock(sub.mutex);
  Tensor out(DType::kFloat64, sub.shape);
  if (!sub.weight.empty()) std::copy(sub.weight.begin(), sub.weight.end(), out.values<double>().begin());
  return out;
}

Tensor Assembler::assemble(std::size_t subject_index) const {
  if (subject_index >= impl_->subjects.size()) {
    throw RangeError("subject index " + std::to_string(subject_index) + " out of range");
  }
  const auto& sub = *impl_->subjects[subject_index];
  std::lock_guard lock(sub.mutex);
  if (sub.received != sub.expected.size() || sub.channels == 0) {
    std::string list;
    std::size_t shown = 0, total = 0;
    for (std::size_t k = 0; k < sub.expected.size(); ++k) {
      if (sub.seen[k]) continue;
      ++total;
      if (shown < 20) {
        list += (shown ? ", " : "") + std::to_string(sub.expected[k]);
        ++shown;
      }
    }
    if (total > shown) list += ", ... (" + std::to_string(total) + " in total)";
    throw NotReadyError("subject " + std::to_string(subject_index) + " is incomplete; missing samples: " +
                        (total ? list : std::string("none (no samples expected)")));
  }
  Shape shape = sub.shape;
  shape.push_back(sub.channels);
  Tensor out(DType::kFloat32, shape);
  auto v = out.values<float>();
  for (std::size_t i = 0; i < sub.weight.size(); ++i) {
    const double w = sub.weight[i];
    if (w <= 0.0) {
      throw AssemblyError("subject " + std::to_string(subject_index) + ": voxel " + std::to_string(i) +
                          " received no prediction");
    }
    for (std::size_t c = 0; c < sub.channels; ++c) {
      v[i * sub.channels + c] = static_cast<float>(sub.sum[i * sub.channels + c] / w);
    }
  }
  return out;
}

Tensor plane_assemble(const std::array<const Assembler*, 3>& planes, std::size_t subject_index) {
  std::array<Tensor, 3> parts;
  for (std::size_t p = 0; p < 3; ++p) {
    if (!planes[p]) throw ArgumentError("plane " + std::to_string(p) + " has no assembler");
    try {
      parts[p] = planes[p]->assemble(subject_index);
    } catch (const NotReadyError& e) {
      throw NotReadyError("plane " + std::to_string(p) + ": " + e.what());
    }
  }
  if (parts[1].shape() != parts[0].shape() || parts[2].shape() != parts[0].shape()) {
    throw AssemblyError("plane assemblies differ in shape");
  }
  Tensor out(DType::kFloat32, parts[0].shape());
  auto v = out.values<float>();
  const auto a = parts[0].values<float>(), b = parts[1].values<float>(), c = parts[2].values<float>();
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = static_cast<float>((static_cast<double>(a[i]) + b[i] + c[i]) / 3.0);
  }
  return out;
}

}  // namespace mia
