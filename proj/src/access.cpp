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

#include "mia/access.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "mia/error.hpp"
#include "mia/intensity.hpp"

namespace mia {

// ---------------------------------------------------------------------------
// Indexing

IndexingStrategy IndexingStrategy::slice(std::size_t axis) {
  IndexingStrategy s;
  s.kind = Kind::kSlice;
  s.axis = axis;
  return s;
}

IndexingStrategy IndexingStrategy::patch(Shape shape, Shape step) {
  IndexingStrategy s;
  s.kind = Kind::kPatch;
  s.shape = std::move(shape);
  s.step = std::move(step);
  return s;
}

IndexingStrategy IndexingStrategy::padded_patch(Shape core, std::vector<std::size_t> pad, Shape step) {
  IndexingStrategy s;
  s.kind = Kind::kPaddedPatch;
  s.shape = std::move(core);
  s.pad = std::move(pad);
  s.step = std::move(step);
  return s;
}

std::string describe(const IndexingStrategy& s) {
  switch (s.kind) {
    case IndexingStrategy::Kind::kEmpty: return "empty";
    case IndexingStrategy::Kind::kSlice: return "slice(axis=" + std::to_string(s.axis) + ")";
    case IndexingStrategy::Kind::kPatch: return "patch(" + shape_to_string(s.shape) + ")";
    case IndexingStrategy::Kind::kPaddedPatch: {
      std::string pad;
      for (std::size_t i = 0; i < s.pad.size(); ++i) pad += (i ? "x" : "") + std::to_string(s.pad[i]);
      return "padded_patch(" + shape_to_string(s.shape) + ", pad=" + pad + ")";
    }
  }
  return "?";
}

namespace {

void check_grid_config(const IndexingStrategy& st, std::size_t rank) {
  if (st.shape.size() != rank) {
    throw ConfigError("patch shape " + shape_to_string(st.shape) + " does not match spatial rank " +
                      std::to_string(rank));
  }
  for (auto v : st.shape) {
    if (v == 0) throw ConfigError("patch extents must be >= 1");
  }
  if (!st.step.empty()) {
    if (st.step.size() != rank) throw ConfigError("patch step rank does not match spatial rank");
    for (auto v : st.step) {
      if (v == 0) throw ConfigError("patch step must be >= 1");
    }
  }
  if (st.kind == IndexingStrategy::Kind::kPaddedPatch && st.pad.size() != rank) {
    throw ConfigError("padding rank does not match spatial rank");
  }
}

}  // namespace

std::vector<SampleSpec> build_index(const std::vector<Shape>& shapes, const IndexingStrategy& st) {
  if (shapes.empty()) throw ConfigError("cannot index an empty subject list");
  std::vector<SampleSpec> specs;
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    const Shape& shape = shapes[s];
    const std::size_t rank = shape.size();
    switch (st.kind) {
      case IndexingStrategy::Kind::kEmpty: {
        SampleSpec spec;
        spec.sample_index = specs.size();
        spec.subject_index = s;
        specs.push_back(spec);
        break;
      }
      case IndexingStrategy::Kind::kSlice: {
        if (st.axis >= rank) {
          throw ConfigError("slice axis " + std::to_string(st.axis) + " out of range for spatial rank " +
                            std::to_string(rank));
        }
        for (std::size_t p = 0; p < shape[st.axis]; ++p) {
          SampleSpec spec;
          spec.sample_index = specs.size();
          spec.subject_index = s;
          spec.expr.start.assign(rank, 0);
          spec.expr.size = shape;
          spec.expr.start[st.axis] = static_cast<std::int64_t>(p);
          spec.expr.size[st.axis] = 1;
          spec.core = spec.expr;
          spec.plane = st.axis;
          specs.push_back(std::move(spec));
        }
        break;
      }
      case IndexingStrategy::Kind::kPatch:
      case IndexingStrategy::Kind::kPaddedPatch: {
        check_grid_config(st, rank);
        const bool padded_kind = st.kind == IndexingStrategy::Kind::kPaddedPatch;
        const Shape& step = st.step.empty() ? st.shape : st.step;
        std::vector<std::size_t> counts(rank);
        for (std::size_t a = 0; a < rank; ++a) {
          if (!padded_kind && st.shape[a] > shape[a]) {
            throw ConfigError("patch shape " + shape_to_string(st.shape) + " exceeds image shape " +
                              shape_to_string(shape) + "; use a padded patch strategy");
          }
          const std::size_t over = shape[a] > st.shape[a] ? shape[a] - st.shape[a] : 0;
          counts[a] = (over + step[a] - 1) / step[a] + 1;
        }
        std::vector<std::size_t> idx(rank, 0);
        for (;;) {
          SampleSpec spec;
          spec.sample_index = specs.size();
          spec.subject_index = s;
          spec.core.size = st.shape;
          for (std::size_t a = 0; a < rank; ++a) {
            const auto start = static_cast<std::int64_t>(idx[a] * step[a]);
            spec.core.start.push_back(start);
            if (padded_kind) {
              spec.expr.start.push_back(start - static_cast<std::int64_t>(st.pad[a]));
              spec.expr.size.push_back(st.shape[a] + 2 * st.pad[a]);
            }
          }
          if (!padded_kind) spec.expr = spec.core;
          for (std::size_t a = 0; a < rank; ++a) {
            if (spec.expr.start[a] < 0 ||
                spec.expr.start[a] + static_cast<std::int64_t>(spec.expr.size[a]) >
                    static_cast<std::int64_t>(shape[a])) {
              spec.padded = true;
            }
          }
          specs.push_back(std::move(spec));
          std::size_t a = rank;
          bool done = true;
          while (a-- > 0) {
            if (++idx[a] < counts[a]) {
              done = false;
              break;
            }
            idx[a] = 0;
          }
          if (done) break;
        }
        break;
      }
    }
  }
  return specs;
}

// ---------------------------------------------------------------------------
// Extractors and transforms

ExtractorSpec ExtractorSpec::data(std::string category) {
  ExtractorSpec e;
  e.kind = Kind::kData;
  e.category = std::move(category);
  return e;
}

ExtractorSpec ExtractorSpec::selective(std::string category, std::vector<std::string> channels) {
  ExtractorSpec e;
  e.kind = Kind::kSelective;
  e.category = std::move(category);
  e.channels = std::move(channels);
  return e;
}

ExtractorSpec ExtractorSpec::pad(ExtractorSpec inner, PadMode mode, std::vector<std::size_t> extra) {
  ExtractorSpec e;
  e.kind = Kind::kPad;
  e.category = inner.category;
  e.pad_mode = mode;
  e.extra_pad = std::move(extra);
  e.inner = std::make_shared<const ExtractorSpec>(std::move(inner));
  return e;
}

ExtractorSpec ExtractorSpec::subject_id() {
  ExtractorSpec e;
  e.kind = Kind::kSubjectId;
  return e;
}

ExtractorSpec ExtractorSpec::geometry(std::string category) {
  ExtractorSpec e;
  e.kind = Kind::kGeometry;
  e.category = std::move(category);
  return e;
}

ExtractorSpec ExtractorSpec::shape() {
  ExtractorSpec e;
  e.kind = Kind::kShape;
  return e;
}

ExtractorSpec ExtractorSpec::names(std::string category) {
  ExtractorSpec e;
  e.kind = Kind::kNames;
  e.category = std::move(category);
  return e;
}

std::string ExtractorSpec::output_key() const {
  if (!key.empty()) return key;
  switch (kind) {
    case Kind::kData:
    case Kind::kSelective: return category;
    case Kind::kPad: return inner ? inner->output_key() : category;
    case Kind::kSubjectId: return "subject_id";
    case Kind::kGeometry: return "geometry";
    case Kind::kShape: return "shape";
    case Kind::kNames: return "names";
  }
  return category;
}

SampleTransform SampleTransform::znormalize(std::vector<std::string> keys) {
  SampleTransform t;
  t.kind = Kind::kZNormalize;
  t.keys = std::move(keys);
  return t;
}

SampleTransform SampleTransform::rescale(double out_min, double out_max, std::vector<std::string> keys) {
  SampleTransform t;
  t.kind = Kind::kRescale;
  t.out_min = out_min;
  t.out_max = out_max;
  t.keys = std::move(keys);
  return t;
}

SampleTransform SampleTransform::apply_mask(std::string mask_key, std::vector<std::string> keys) {
  SampleTransform t;
  t.kind = Kind::kApplyMask;
  t.mask_key = std::move(mask_key);
  t.keys = std::move(keys);
  return t;
}

SampleTransform SampleTransform::random_flip(std::vector<std::size_t> axes, double probability,
                                             std::uint64_t seed, std::vector<std::string> keys) {
  SampleTransform t;
  t.kind = Kind::kRandomFlip;
  t.axes = std::move(axes);
  t.probability = probability;
  t.seed = seed;
  t.keys = std::move(keys);
  return t;
}

SampleTransform SampleTransform::permute_channels_first(std::vector<std::string> keys) {
  SampleTransform t;
  t.kind = Kind::kPermuteChannelsFirst;
  t.keys = std::move(keys);
  return t;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double next_unit(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

Tensor flip_axis(const Tensor& t, std::size_t axis) {
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= t.shape()[a];
  for (std::size_t a = axis + 1; a < t.rank(); ++a) inner *= t.shape()[a];
  const std::size_t n = t.shape()[axis];
  Tensor out = t;
  out.visit([&](auto v) {
    for (std::size_t o = 0; o < outer; ++o) {
      auto* base = v.data() + o * n * inner;
      for (std::size_t i = 0; i < n / 2; ++i) {
        std::swap_ranges(base + i * inner, base + (i + 1) * inner, base + (n - 1 - i) * inner);
      }
    }
  });
  return out;
}

Tensor channels_first(const Tensor& t) {
  const std::size_t c = t.shape().back();
  const std::size_t voxels = t.size() / c;
  Shape shape{c};
  shape.insert(shape.end(), t.shape().begin(), t.shape().end() - 1);
  Tensor out(t.dtype(), shape);
  out.visit([&](auto dst) {
    using T = typename decltype(dst)::value_type;
    const auto src = t.values<T>();
    for (std::size_t v = 0; v < voxels; ++v) {
      for (std::size_t k = 0; k < c; ++k) dst[k * voxels + v] = src[v * c + k];
    }
  });
  return out;
}

Tensor pick_channels(const Tensor& t, const std::vector<std::size_t>& channels) {
  const std::size_t c = t.shape().back();
  const std::size_t voxels = t.size() / c;
  Shape shape = t.shape();
  shape.back() = channels.size();
  Tensor out(t.dtype(), shape);
  out.visit([&](auto dst) {
    using T = typename decltype(dst)::value_type;
    const auto src = t.values<T>();
    for (std::size_t v = 0; v < voxels; ++v) {
      for (std::size_t k = 0; k < channels.size(); ++k) dst[v * channels.size() + k] = src[v * c + channels[k]];
    }
  });
  return out;
}

Tensor apply_mask_to(const Tensor& image, const Tensor& mask, std::size_t spatial_rank) {
  const Shape spatial(image.shape().begin(), image.shape().begin() + static_cast<std::ptrdiff_t>(spatial_rank));
  if (mask.rank() < spatial_rank || !std::equal(spatial.begin(), spatial.end(), mask.shape().begin()) ||
      mask.size() != element_count(spatial)) {
    throw ArgumentError("mask shape " + shape_to_string(mask.shape()) + " does not fit image shape " +
                        shape_to_string(image.shape()));
  }
  const auto m = mask.to_doubles();
  const std::size_t c = image.size() / m.size();
  Tensor out = image;
  out.visit([&](auto v) {
    using T = typename decltype(v)::value_type;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i] == 0.0) std::fill_n(v.data() + i * c, c, T{});
    }
  });
  return out;
}

}  // namespace

std::uint64_t sample_seed(std::uint64_t seed, std::size_t sample_index) {
  std::uint64_t s = static_cast<std::uint64_t>(sample_index);
  return seed ^ splitmix64(s);
}

// ---------------------------------------------------------------------------
// Sample

const Tensor& Sample::tensor(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) throw LookupError("sample has no entry '" + key + "'");
  if (const auto* t = std::get_if<Tensor>(&it->second)) return *t;
  throw ArgumentError("sample entry '" + key + "' is not a tensor");
}

const std::string& Sample::text(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) throw LookupError("sample has no entry '" + key + "'");
  if (const auto* t = std::get_if<std::string>(&it->second)) return *t;
  throw ArgumentError("sample entry '" + key + "' is not a string");
}

// ---------------------------------------------------------------------------
// Datasource

Datasource::Datasource(std::shared_ptr<const Dataset> dataset, DatasourceConfig config)
    : dataset_(std::move(dataset)), config_(std::move(config)) {
  if (!dataset_) throw ArgumentError("datasource needs a dataset");
  const Dataset& ds = *dataset_;
  if (config_.subjects.empty()) {
    subjects_ = ds.subjects();
  } else {
    for (const auto& id : config_.subjects) {
      if (std::find(ds.subjects().begin(), ds.subjects().end(), id) == ds.subjects().end()) {
        throw ConfigError("unknown subject '" + id + "'");
      }
    }
    for (const auto& id : ds.subjects()) {
      if (std::find(config_.subjects.begin(), config_.subjects.end(), id) != config_.subjects.end()) {
        subjects_.push_back(id);
      }
    }
  }
  if (subjects_.empty()) throw ConfigError("datasource selects no subjects");

  auto descriptor_or_config_error = [&](const std::string& subject,
                                        const std::string& category) -> const CategoryDescriptor& {
    try {
      return ds.descriptor(subject, category);
    } catch (const LookupError&) {
      throw ConfigError("extractor references category '" + category + "' missing for subject '" + subject +
                        "'");
    }
  };

  for (const auto& s : subjects_) {
    const auto& d = descriptor_or_config_error(s, config_.reference_category);
    if (!d.geometry) {
      throw ConfigError("reference category '" + config_.reference_category + "' is not an image");
    }
    shapes_.push_back(d.spatial_shape());
  }

  std::set<std::string> keys;
  for (const auto& e : config_.extractors) {
    const ExtractorSpec* data = &e;
    if (e.kind == ExtractorSpec::Kind::kPad) {
      if (!e.inner || (e.inner->kind != ExtractorSpec::Kind::kData &&
                       e.inner->kind != ExtractorSpec::Kind::kSelective)) {
        throw ConfigError("pad extractor must wrap a data or selective extractor");
      }
      if (!e.extra_pad.empty() && e.extra_pad.size() != shapes_.front().size()) {
        throw ConfigError("pad extractor padding rank does not match spatial rank");
      }
      data = e.inner.get();
    }
    switch (data->kind) {
      case ExtractorSpec::Kind::kData:
      case ExtractorSpec::Kind::kSelective:
      case ExtractorSpec::Kind::kGeometry:
        for (std::size_t i = 0; i < subjects_.size(); ++i) {
          const auto& d = descriptor_or_config_error(subjects_[i], data->category);
          if (d.geometry && d.spatial_shape() != shapes_[i]) {
            throw ConfigError("category '" + data->category + "' of subject '" + subjects_[i] +
                              "' has spatial shape " + shape_to_string(d.spatial_shape()) + ", expected " +
                              shape_to_string(shapes_[i]));
          }
          if (data->kind == ExtractorSpec::Kind::kGeometry && !d.geometry) {
            throw ConfigError("category '" + data->category + "' has no geometry");
          }
          if (e.kind == ExtractorSpec::Kind::kPad && !d.geometry) {
            throw ConfigError("pad extractor on non-image category '" + data->category + "'");
          }
        }
        break;
      default:
        break;
    }
    if (data->kind == ExtractorSpec::Kind::kSelective) {
      const auto names = ds.channel_names(data->category);
      if (data->channels.empty()) throw ConfigError("selective extractor lists no channels");
      for (const auto& c : data->channels) {
        if (std::find(names.begin(), names.end(), c) == names.end()) {
          throw ConfigError("channel '" + c + "' is not among the names of '" + data->category + "'");
        }
      }
    }
    if (!keys.insert(e.output_key()).second) throw ConfigError("duplicate sample key '" + e.output_key() + "'");
  }

  std::set<std::string> permuted;
  for (const auto& t : config_.transforms) {
    for (const auto& k : t.keys) {
      if (!keys.count(k)) throw ConfigError("transform references sample key '" + k + "' that no extractor produces");
      if (permuted.count(k)) throw ConfigError("'" + k + "' is transformed after its channels were moved first");
      if (t.kind == SampleTransform::Kind::kPermuteChannelsFirst) permuted.insert(k);
    }
    if (t.kind == SampleTransform::Kind::kApplyMask && !keys.count(t.mask_key)) {
      throw ConfigError("mask key '" + t.mask_key + "' is not extracted");
    }
    if (t.kind == SampleTransform::Kind::kRandomFlip) {
      if (!(t.probability >= 0.0 && t.probability <= 1.0)) throw ConfigError("flip probability outside [0, 1]");
      for (auto a : t.axes) {
        if (a >= shapes_.front().size()) throw ConfigError("flip axis out of range");
      }
    }
  }

  specs_ = build_index(shapes_, config_.strategy);
}

Datasource Datasource::from_container(const std::filesystem::path& path, DatasourceConfig config) {
  return Datasource(std::make_shared<const Dataset>(Dataset::open(path)), std::move(config));
}

Datasource Datasource::from_filesystem(const std::filesystem::path& metadata_path, DatasourceConfig config) {
  auto ds = std::make_shared<const Dataset>(Dataset::open(metadata_path));
  if (!ds->metadata_only()) {
    throw ConfigError("'" + metadata_path.string() + "' holds payloads; a metadata container is required");
  }
  return Datasource(std::move(ds), std::move(config));
}

const SampleSpec& Datasource::spec(std::size_t sample_index) const {
  if (sample_index >= specs_.size()) {
    throw RangeError("sample index " + std::to_string(sample_index) + " out of range [0, " +
                     std::to_string(specs_.size()) + ")");
  }
  return specs_[sample_index];
}

Tensor Datasource::read_padded(const std::string& subject, const std::string& category,
                               const IndexExpression& region, PadMode mode) const {
  const CategoryDescriptor& d = dataset_->descriptor(subject, category);
  if (!d.geometry || region.is_full()) return dataset_->read_region(subject, category);
  const std::size_t rank = region.start.size();
  bool inside = true;
  for (std::size_t a = 0; a < rank; ++a) {
    if (region.start[a] < 0 || region.start[a] + static_cast<std::int64_t>(region.size[a]) >
                                   static_cast<std::int64_t>(d.shape[a])) {
      inside = false;
    }
  }
  if (inside) return dataset_->read_region(subject, category, region);

  // Read the bounding box of the source voxels, then gather from it.
  std::vector<std::vector<std::int64_t>> maps(rank);
  IndexExpression box;
  bool any = true;
  for (std::size_t a = 0; a < rank; ++a) {
    maps[a] = axis_index_map(region.start[a], region.size[a], d.shape[a], mode);
    std::int64_t lo = -1, hi = -1;
    for (auto v : maps[a]) {
      if (v < 0) continue;
      lo = lo < 0 ? v : std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo < 0) {
      any = false;
      break;
    }
    for (auto& v : maps[a]) {
      if (v >= 0) v -= lo;
    }
    box.start.push_back(lo);
    box.size.push_back(static_cast<std::size_t>(hi - lo + 1));
  }
  if (!any) {
    Shape shape(region.size.begin(), region.size.end());
    if (d.shape.size() > rank) shape.push_back(d.shape.back());
    return Tensor(d.dtype, shape);
  }
  return gather_subtensor(dataset_->read_region(subject, category, box), maps);
}

Sample Datasource::get_sample(std::size_t sample_index) const {
  const SampleSpec& sp = spec(sample_index);
  const std::string& subject = subjects_[sp.subject_index];
  Sample sample;
  sample.index = sample_index;
  sample.subject_index = sp.subject_index;
  std::set<std::string> channel_keys;  // tensors with a trailing channel axis

  auto extract_data = [&](const ExtractorSpec& e, const IndexExpression& region, PadMode mode) {
    Tensor t = read_padded(subject, e.category, region, mode);
    if (e.kind == ExtractorSpec::Kind::kSelective) {
      const auto names = dataset_->channel_names(e.category);
      std::vector<std::size_t> idx;
      for (const auto& c : e.channels) {
        idx.push_back(static_cast<std::size_t>(std::find(names.begin(), names.end(), c) - names.begin()));
      }
      t = pick_channels(t, idx);
    }
    return t;
  };

  for (const auto& e : config_.extractors) {
    const std::string key = e.output_key();
    switch (e.kind) {
      case ExtractorSpec::Kind::kData:
      case ExtractorSpec::Kind::kSelective: {
        sample.entries[key] = extract_data(e, sp.core, PadMode::kZero);
        if (dataset_->descriptor(subject, e.category).geometry) channel_keys.insert(key);
        break;
      }
      case ExtractorSpec::Kind::kPad: {
        IndexExpression region = sp.expr;
        if (region.is_full()) {
          region.start.assign(shapes_[sp.subject_index].size(), 0);
          region.size = shapes_[sp.subject_index];
        }
        for (std::size_t a = 0; a < e.extra_pad.size(); ++a) {
          region.start[a] -= static_cast<std::int64_t>(e.extra_pad[a]);
          region.size[a] += 2 * e.extra_pad[a];
        }
        sample.entries[key] = extract_data(*e.inner, region, e.pad_mode);
        channel_keys.insert(key);
        break;
      }
      case ExtractorSpec::Kind::kSubjectId:
        sample.entries[key] = subject;
        break;
      case ExtractorSpec::Kind::kGeometry:
        sample.entries[key] = *dataset_->descriptor(subject, e.category).geometry;
        break;
      case ExtractorSpec::Kind::kShape:
        sample.entries[key] = shapes_[sp.subject_index];
        break;
      case ExtractorSpec::Kind::kNames:
        sample.entries[key] = dataset_->channel_names(e.category);
        break;
    }
  }

  const std::size_t spatial_rank = shapes_[sp.subject_index].size();
  auto tensor_at = [&](const std::string& key) -> Tensor& {
    auto* t = std::get_if<Tensor>(&sample.entries.at(key));
    if (!t) throw ConfigError("sample entry '" + key + "' is not a tensor");
    return *t;
  };

  for (const auto& tr : config_.transforms) {
    switch (tr.kind) {
      case SampleTransform::Kind::kZNormalize:
        for (const auto& k : tr.keys) tensor_at(k) = znormalize(tensor_at(k), channel_keys.count(k) != 0);
        break;
      case SampleTransform::Kind::kRescale:
        for (const auto& k : tr.keys) tensor_at(k) = rescale_intensity(tensor_at(k), tr.out_min, tr.out_max);
        break;
      case SampleTransform::Kind::kApplyMask: {
        const Tensor& mask = tensor_at(tr.mask_key);
        for (const auto& k : tr.keys) tensor_at(k) = apply_mask_to(tensor_at(k), mask, spatial_rank);
        break;
      }
      case SampleTransform::Kind::kRandomFlip: {
        std::uint64_t state = sample_seed(tr.seed, sample_index);
        std::vector<std::size_t> flips;
        for (auto a : tr.axes) {
          if (next_unit(state) < tr.probability) flips.push_back(a);
        }
        for (const auto& k : tr.keys) {
          for (auto a : flips) tensor_at(k) = flip_axis(tensor_at(k), a);
        }
        break;
      }
      case SampleTransform::Kind::kPermuteChannelsFirst:
        for (const auto& k : tr.keys) {
          if (channel_keys.erase(k)) tensor_at(k) = channels_first(tensor_at(k));
        }
        break;
    }
  }
  return sample;
}

}  // namespace mia
