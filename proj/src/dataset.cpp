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

#include "mia/dataset.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <set>
#include <sstream>
#include <unordered_map>

#include "dataset_internal.hpp"
#include "mia/intensity.hpp"

namespace mia {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Write-time transforms

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, CustomTransformFn>& registry() {
  static std::map<std::string, CustomTransformFn> r;
  return r;
}

CustomTransformFn lookup_custom(const std::string& name) {
  std::lock_guard lock(registry_mutex());
  auto it = registry().find(name);
  if (it == registry().end()) {
    throw ConfigError("creation transform '" + name + "' is not registered");
  }
  return it->second;
}

bool applies_to(const CreationTransform& t, std::string_view category) {
  return std::find(t.categories.begin(), t.categories.end(), category) != t.categories.end();
}

}  // namespace

void register_creation_transform(const std::string& name, CustomTransformFn fn) {
  std::lock_guard lock(registry_mutex());
  registry()[name] = std::move(fn);
}

namespace detail {

bool has_transforms_for(std::span<const CreationTransform> transforms, std::string_view category) {
  return std::any_of(transforms.begin(), transforms.end(),
                     [&](const auto& t) { return applies_to(t, category); });
}

Tensor concat_channels(std::span<const Tensor> parts, std::size_t spatial_rank) {
  if (parts.empty()) throw ArgumentError("no channel sources");
  if (std::all_of(parts.begin(), parts.end(), [&](const Tensor& p) { return p.rank() == spatial_rank; })) {
    return stack_channels(parts);
  }
  const Tensor& first = parts.front();
  Shape spatial(first.shape().begin(), first.shape().begin() + static_cast<std::ptrdiff_t>(spatial_rank));
  std::vector<std::size_t> channels;
  for (const auto& p : parts) {
    if (p.dtype() != first.dtype() ||
        !std::equal(spatial.begin(), spatial.end(), p.shape().begin()) ||
        p.rank() > spatial_rank + 1) {
      throw ArgumentError("channel sources differ in dtype or spatial shape");
    }
    channels.push_back(p.rank() == spatial_rank ? 1 : p.shape().back());
  }
  std::size_t total = 0;
  for (auto c : channels) total += c;
  Shape shape = spatial;
  shape.push_back(total);
  Tensor out(first.dtype(), shape);
  const std::size_t voxels = element_count(spatial);
  out.visit([&](auto dst) {
    using T = typename decltype(dst)::value_type;
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const auto src = parts[k].values<T>();
      const std::size_t c = channels[k];
      for (std::size_t i = 0; i < voxels; ++i) {
        std::copy_n(src.data() + i * c, c, dst.data() + i * total + offset);
      }
      offset += c;
    }
  });
  return out;
}

Image load_file_category(std::string_view category, std::span<const fs::path> files,
                         std::optional<DType> cast, std::span<const CreationTransform> transforms,
                         const IndexExpression* region) {
  if (files.empty()) throw ArgumentError("category '" + std::string(category) + "' lists no files");
  const bool crop_early = region && !region->is_full() && !has_transforms_for(transforms, category);
  std::vector<Tensor> parts;
  parts.reserve(files.size());
  ImageGeometry geometry;
  for (std::size_t k = 0; k < files.size(); ++k) {
    std::error_code ec;
    if (!fs::exists(files[k], ec)) throw DanglingSourceError(files[k].string());
    Image img = read_image(files[k]);
    if (k == 0) {
      geometry = img.geometry;
    } else if (img.geometry.ndim() != geometry.ndim()) {
      throw ArgumentError("'" + files[k].string() + "' has a different dimensionality");
    }
    if (crop_early) {
      img.tensor = extract_subtensor(img.tensor, region->start, region->size);
    }
    parts.push_back(std::move(img.tensor));
  }
  for (std::size_t k = 1; k < parts.size(); ++k) {
    const auto& a = parts.front().shape();
    const auto& b = parts[k].shape();
    if (!std::equal(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(geometry.ndim()), b.begin(),
                    b.begin() + static_cast<std::ptrdiff_t>(std::min(b.size(), geometry.ndim()))) ||
        b.size() < geometry.ndim()) {
      throw ArgumentError("channel files of '" + std::string(category) + "' differ in shape: " +
                          shape_to_string(a) + " vs " + shape_to_string(b) + " ('" + files[k].string() +
                          "')");
    }
  }
  if (parts.size() > 1) {
    for (auto& p : parts) {
      if (p.dtype() != parts.front().dtype()) p = p.astype(parts.front().dtype());
    }
  }
  Tensor tensor = concat_channels(parts, geometry.ndim());
  parts.clear();
  if (cast) tensor = tensor.astype(*cast);
  for (const auto& t : transforms) {
    if (!applies_to(t, category)) continue;
    switch (t.kind) {
      case CreationTransform::Kind::kZNormalize:
        tensor = znormalize(tensor, true);
        break;
      case CreationTransform::Kind::kRescale:
        tensor = rescale_intensity(tensor, t.out_min, t.out_max);
        break;
      case CreationTransform::Kind::kCustom:
        tensor = lookup_custom(t.name)(tensor, geometry);
        break;
    }
  }
  if (region && !region->is_full() && !crop_early) {
    tensor = extract_subtensor(tensor, region->start, region->size);
  }
  return {std::move(tensor), std::move(geometry)};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// JSON encoding

namespace {

json geometry_to_json(const ImageGeometry& g) {
  return json{{"spacing", g.spacing}, {"origin", g.origin}, {"direction", g.direction}};
}

ImageGeometry geometry_from_json(const json& j) {
  ImageGeometry g;
  g.spacing = j.at("spacing").get<std::vector<double>>();
  g.origin = j.at("origin").get<std::vector<double>>();
  g.direction = j.at("direction").get<std::vector<double>>();
  return g;
}

std::string_view storage_name(PayloadStorage s) {
  switch (s) {
    case PayloadStorage::kPayload: return "payload";
    case PayloadStorage::kFiles: return "files";
    case PayloadStorage::kInline: return "inline";
  }
  return "payload";
}

PayloadStorage parse_storage(const std::string& s) {
  if (s == "payload") return PayloadStorage::kPayload;
  if (s == "files") return PayloadStorage::kFiles;
  if (s == "inline") return PayloadStorage::kInline;
  throw CorruptFileError("unknown payload storage '" + s + "'");
}

json descriptor_to_json(const CategoryDescriptor& d) {
  json j{{"category", d.category},
         {"subject_id", d.subject_id},
         {"dtype", std::string(dtype_name(d.dtype))},
         {"shape", d.shape},
         {"byte_offset", d.byte_offset},
         {"storage", std::string(storage_name(d.storage))},
         {"geometry", d.geometry ? geometry_to_json(*d.geometry) : json(nullptr)}};
  if (d.storage == PayloadStorage::kFiles) j["sources"] = d.sources;
  if (d.storage == PayloadStorage::kInline) j["values"] = d.values;
  return j;
}

CategoryDescriptor descriptor_from_json(const json& j) {
  CategoryDescriptor d;
  d.category = j.at("category").get<std::string>();
  d.subject_id = j.at("subject_id").get<std::string>();
  d.dtype = parse_dtype(j.at("dtype").get<std::string>());
  d.shape = j.at("shape").get<Shape>();
  d.byte_offset = j.at("byte_offset").get<std::uint64_t>();
  d.storage = parse_storage(j.at("storage").get<std::string>());
  if (!j.at("geometry").is_null()) d.geometry = geometry_from_json(j.at("geometry"));
  if (j.contains("sources")) d.sources = j.at("sources").get<std::vector<std::string>>();
  if (j.contains("values")) d.values = j.at("values").get<std::vector<double>>();
  return d;
}

std::string_view transform_kind_name(CreationTransform::Kind k) {
  switch (k) {
    case CreationTransform::Kind::kZNormalize: return "znormalize";
    case CreationTransform::Kind::kRescale: return "rescale";
    case CreationTransform::Kind::kCustom: return "custom";
  }
  return "custom";
}

json transform_to_json(const CreationTransform& t) {
  json j{{"kind", std::string(transform_kind_name(t.kind))}, {"categories", t.categories}};
  if (t.kind == CreationTransform::Kind::kRescale) {
    j["out_min"] = t.out_min;
    j["out_max"] = t.out_max;
  }
  if (t.kind == CreationTransform::Kind::kCustom) j["name"] = t.name;
  return j;
}

CreationTransform transform_from_json(const json& j) {
  CreationTransform t;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "znormalize") {
    t.kind = CreationTransform::Kind::kZNormalize;
  } else if (kind == "rescale") {
    t.kind = CreationTransform::Kind::kRescale;
    t.out_min = j.at("out_min").get<double>();
    t.out_max = j.at("out_max").get<double>();
  } else if (kind == "custom") {
    t.kind = CreationTransform::Kind::kCustom;
    t.name = j.at("name").get<std::string>();
  } else {
    throw CorruptFileError("unknown creation transform '" + kind + "'");
  }
  t.categories = j.at("categories").get<std::vector<std::string>>();
  return t;
}

void write_u64_le(char* dst, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) dst[i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint64_t read_u64_le(const unsigned char* src) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(src[i]) << (8 * i);
  return v;
}

std::uint64_t align_up(std::uint64_t v) {
  return (v + kPayloadAlignment - 1) / kPayloadAlignment * kPayloadAlignment;
}

Tensor inline_tensor(const InlineValues& v) {
  if (v.values.empty()) throw ArgumentError("inline payload has no values");
  Tensor t(DType::kFloat64, Shape{v.values.size()});
  std::copy(v.values.begin(), v.values.end(), t.values<double>().begin());
  return t.astype(v.dtype);
}

}  // namespace

// ---------------------------------------------------------------------------
// Creation

ContainerSummary create_dataset(const CreationPlan& plan, const fs::path& out_path) {
  if (plan.metadata_only && plan.omit_provenance) {
    throw CreationError("a metadata-only container needs the source paths; omit_provenance is not allowed");
  }
  {
    std::set<std::string> seen;
    for (const auto& s : plan.subjects) {
      if (s.id.empty()) throw CreationError("subject id must not be empty");
      if (!seen.insert(s.id).second) throw CreationError("duplicate subject id '" + s.id + "'");
      std::set<std::string> cats;
      for (const auto& [cat, src] : s.categories) {
        if (!cats.insert(cat).second) {
          throw CreationError("subject '" + s.id + "' lists category '" + cat + "' twice");
        }
      }
    }
  }

  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + out_path.string() + "'");
  const std::string zeros(kContainerHeaderSize, '\0');
  out.write(zeros.data(), static_cast<std::streamsize>(zeros.size()));

  std::vector<CategoryDescriptor> descriptors;
  std::vector<ProvenanceEntry> provenance;
  std::vector<std::string> category_order;
  std::map<std::string, std::vector<std::string>> default_names;
  std::uint64_t data_cursor = 0;  // relative to the data section

  auto note_category = [&](const std::string& cat) {
    if (std::find(category_order.begin(), category_order.end(), cat) == category_order.end()) {
      category_order.push_back(cat);
    }
  };

  auto write_payload = [&](CategoryDescriptor& d, const Tensor& t) {
    d.byte_offset = align_up(data_cursor);
    if (d.byte_offset > data_cursor) {
      const std::string pad(d.byte_offset - data_cursor, '\0');
      out.write(pad.data(), static_cast<std::streamsize>(pad.size()));
    }
    const auto bytes = t.bytes();
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + out_path.string() + "'");
    data_cursor = d.byte_offset + bytes.size();
  };

  for (const auto& subject : plan.subjects) {
    std::optional<Shape> spatial_ref;
    std::string spatial_ref_cat;
    for (const auto& [category, source] : subject.categories) {
      note_category(category);
      CategoryDescriptor d;
      d.category = category;
      d.subject_id = subject.id;
      if (const auto* files = std::get_if<FileList>(&source)) {
        std::optional<DType> cast;
        if (auto it = plan.dtypes.find(category); it != plan.dtypes.end()) cast = it->second;
        Image img;
        try {
          img = detail::load_file_category(category, *files, cast, plan.transforms, nullptr);
        } catch (const Error& e) {
          throw CreationError("subject '" + subject.id + "', category '" + category + "': " + e.what());
        }
        d.dtype = img.tensor.dtype();
        d.shape = img.tensor.shape();
        d.geometry = img.geometry;
        const Shape spatial = d.spatial_shape();
        if (!spatial_ref) {
          spatial_ref = spatial;
          spatial_ref_cat = category;
        } else if (*spatial_ref != spatial) {
          throw CreationError("subject '" + subject.id + "', category '" + category + "': spatial shape " +
                              shape_to_string(spatial) + " does not match " + shape_to_string(*spatial_ref) +
                              " of category '" + spatial_ref_cat + "'");
        }
        if (!default_names.count(category)) {
          std::vector<std::string> names;
          for (const auto& f : *files) {
            std::string stem = f.filename().string();
            stem = stem.substr(0, stem.find('.'));
            names.push_back(stem);
          }
          default_names[category] = std::move(names);
        }
        if (!plan.omit_provenance) {
          for (const auto& f : *files) {
            ProvenanceEntry p{subject.id, category, f.string(), std::nullopt};
            if (plan.record_hashes) p.sha256 = hash_file(f);
            provenance.push_back(std::move(p));
          }
        }
        if (plan.metadata_only) {
          d.storage = PayloadStorage::kFiles;
          for (const auto& f : *files) d.sources.push_back(f.string());
        } else {
          write_payload(d, img.tensor);
        }
      } else {
        const auto& values = std::get<InlineValues>(source);
        Tensor t;
        try {
          t = inline_tensor(values);
        } catch (const Error& e) {
          throw CreationError("subject '" + subject.id + "', category '" + category + "': " + e.what());
        }
        d.dtype = t.dtype();
        d.shape = t.shape();
        if (!default_names.count(category)) {
          std::vector<std::string> names;
          for (std::size_t i = 0; i < t.size(); ++i) names.push_back(category + "_" + std::to_string(i));
          default_names[category] = std::move(names);
        }
        if (plan.metadata_only) {
          d.storage = PayloadStorage::kInline;
          d.values = t.to_doubles();
        } else {
          write_payload(d, t);
        }
      }
      descriptors.push_back(std::move(d));
    }
  }

  json names = json::object();
  for (const auto& cat : category_order) {
    auto it = plan.names.find(cat);
    names[cat] = it != plan.names.end() ? it->second : default_names[cat];
  }
  for (const auto& [cat, list] : plan.names) {
    if (!names.contains(cat)) names[cat] = list;
  }

  json meta;
  meta["format_version"] = kContainerFormatVersion;
  meta["metadata_only"] = plan.metadata_only;
  json subjects = json::array();
  for (const auto& s : plan.subjects) subjects.push_back(s.id);
  meta["subjects"] = std::move(subjects);
  meta["category_order"] = category_order;
  json descs = json::array();
  for (const auto& d : descriptors) descs.push_back(descriptor_to_json(d));
  meta["descriptors"] = std::move(descs);
  meta["names"] = std::move(names);
  json prov = json::array();
  for (const auto& p : provenance) {
    prov.push_back(json{{"subject_id", p.subject_id},
                        {"category", p.category},
                        {"source_path", p.source_path},
                        {"sha256", p.sha256 ? json(*p.sha256) : json(nullptr)}});
  }
  meta["provenance"] = std::move(prov);
  json transforms = json::array();
  for (const auto& t : plan.transforms) transforms.push_back(transform_to_json(t));
  meta["transforms"] = std::move(transforms);
  json dtypes = json::object();
  for (const auto& [cat, dt] : plan.dtypes) dtypes[cat] = std::string(dtype_name(dt));
  meta["dtypes"] = std::move(dtypes);

  const std::string meta_text = meta.dump();
  const std::uint64_t meta_offset = kContainerHeaderSize + align_up(data_cursor);
  if (meta_offset > kContainerHeaderSize + data_cursor) {
    const std::string pad(meta_offset - kContainerHeaderSize - data_cursor, '\0');
    out.write(pad.data(), static_cast<std::streamsize>(pad.size()));
  }
  out.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));

  char header[24];
  std::memcpy(header, kContainerMagic, 8);
  write_u64_le(header + 8, meta_offset);
  write_u64_le(header + 16, meta_text.size());
  out.seekp(0);
  out.write(header, sizeof(header));
  out.close();
  if (!out) throw IoError("write failed for '" + out_path.string() + "'");

  ContainerSummary summary;
  summary.subjects = plan.subjects.size();
  summary.categories = category_order;
  summary.payload_bytes = 0;
  for (const auto& d : descriptors) {
    if (d.storage == PayloadStorage::kPayload) summary.payload_bytes += d.nbytes();
  }
  summary.file_bytes = meta_offset + meta_text.size();
  return summary;
}

ContainerSummary create_metadata_dataset(CreationPlan plan, const fs::path& out_path) {
  plan.metadata_only = true;
  return create_dataset(plan, out_path);
}

// ---------------------------------------------------------------------------
// Reading

struct Dataset::Impl {
  fs::path path;
  int fd = -1;
  std::uint64_t file_size = 0;
  json meta;
  bool metadata_only = false;
  std::vector<std::string> subjects;
  std::vector<std::string> category_order;
  std::vector<CategoryDescriptor> descriptors;
  std::unordered_map<std::string, std::unordered_map<std::string, std::size_t>> lookup;
  std::map<std::string, std::vector<std::string>> names;
  std::vector<ProvenanceEntry> provenance;
  std::vector<CreationTransform> transforms;
  std::map<std::string, DType> dtypes;
  mutable std::atomic<std::uint64_t> read_calls{0};
  mutable std::atomic<std::uint64_t> bytes_read{0};

  ~Impl() {
    if (fd >= 0) ::close(fd);
  }

  void pread_exact(std::byte* dst, std::size_t n, std::uint64_t offset) const {
    std::size_t done = 0;
    while (done < n) {
      const ssize_t r = ::pread(fd, dst + done, n - done, static_cast<off_t>(offset + done));
      if (r < 0) {
        if (errno == EINTR) continue;
        throw IoError("read failed on '" + path.string() + "': " + std::strerror(errno));
      }
      if (r == 0) throw CorruptFileError("'" + path.string() + "' ended inside a payload");
      done += static_cast<std::size_t>(r);
    }
    read_calls.fetch_add(1, std::memory_order_relaxed);
    bytes_read.fetch_add(n, std::memory_order_relaxed);
  }
};

Dataset::Dataset(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Dataset::Dataset(Dataset&&) noexcept = default;
Dataset& Dataset::operator=(Dataset&&) noexcept = default;
Dataset::~Dataset() = default;

Dataset Dataset::open(const fs::path& path) {
  auto impl = std::make_unique<Impl>();
  impl->path = path;
  impl->fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (impl->fd < 0) throw IoError("cannot open '" + path.string() + "': " + std::strerror(errno));
  struct stat st {};
  if (::fstat(impl->fd, &st) != 0) throw IoError("cannot stat '" + path.string() + "'");
  impl->file_size = static_cast<std::uint64_t>(st.st_size);

  unsigned char header[24] = {};
  if (impl->file_size < sizeof(header)) {
    if (impl->file_size >= 6 && ::pread(impl->fd, header, 6, 0) == 6) {
      if (std::memcmp(header, kContainerMagic, 6) == 0) {
        throw CorruptFileError("'" + path.string() + "' is truncated (no complete header)");
      }
    }
    throw NotADatasetError("'" + path.string() + "' is not a dataset container");
  }
  impl->pread_exact(reinterpret_cast<std::byte*>(header), sizeof(header), 0);
  if (std::memcmp(header, kContainerMagic, 6) != 0) {
    throw NotADatasetError("'" + path.string() + "' is not a dataset container (bad magic)");
  }
  if (std::memcmp(header + 6, kContainerMagic + 6, 2) != 0) {
    throw VersionError("'" + path.string() + "' has container version " + std::to_string(header[6]) + "." +
                       std::to_string(header[7]) + "; this reader supports 1.0");
  }
  const std::uint64_t meta_offset = read_u64_le(header + 8);
  const std::uint64_t meta_length = read_u64_le(header + 16);
  if (meta_offset < kContainerHeaderSize || meta_length == 0 || meta_offset > impl->file_size ||
      meta_length > impl->file_size - meta_offset) {
    throw CorruptFileError("'" + path.string() + "' is truncated or corrupt (metadata block out of bounds)");
  }
  std::string text(meta_length, '\0');
  impl->pread_exact(reinterpret_cast<std::byte*>(text.data()), text.size(), meta_offset);
  try {
    impl->meta = json::parse(text);
  } catch (const json::exception& e) {
    throw CorruptFileError("'" + path.string() + "' has an unreadable metadata block: " + e.what());
  }

  try {
    const auto& m = impl->meta;
    const int version = m.at("format_version").get<int>();
    if (version != kContainerFormatVersion) {
      throw VersionError("'" + path.string() + "' has metadata format version " + std::to_string(version));
    }
    impl->metadata_only = m.at("metadata_only").get<bool>();
    impl->subjects = m.at("subjects").get<std::vector<std::string>>();
    impl->category_order = m.at("category_order").get<std::vector<std::string>>();
    for (const auto& j : m.at("descriptors")) impl->descriptors.push_back(descriptor_from_json(j));
    for (const auto& [k, v] : m.at("names").items()) impl->names[k] = v.get<std::vector<std::string>>();
    for (const auto& j : m.at("provenance")) {
      ProvenanceEntry p;
      p.subject_id = j.at("subject_id").get<std::string>();
      p.category = j.at("category").get<std::string>();
      p.source_path = j.at("source_path").get<std::string>();
      if (!j.at("sha256").is_null()) p.sha256 = j.at("sha256").get<std::string>();
      impl->provenance.push_back(std::move(p));
    }
    for (const auto& j : m.at("transforms")) impl->transforms.push_back(transform_from_json(j));
    for (const auto& [k, v] : m.at("dtypes").items()) impl->dtypes[k] = parse_dtype(v.get<std::string>());
  } catch (const json::exception& e) {
    throw CorruptFileError("'" + path.string() + "' has malformed metadata: " + e.what());
  }

  for (std::size_t i = 0; i < impl->descriptors.size(); ++i) {
    const auto& d = impl->descriptors[i];
    impl->lookup[d.subject_id][d.category] = i;
    if (d.storage == PayloadStorage::kPayload) {
      const std::uint64_t end = kContainerHeaderSize + d.byte_offset + d.nbytes();
      if (end > meta_offset) {
        throw CorruptFileError("'" + path.string() + "': payload of " + d.subject_id + "/" + d.category +
                               " extends past the data section");
      }
    }
  }
  impl->read_calls = 0;
  impl->bytes_read = 0;
  return Dataset(std::move(impl));
}

const fs::path& Dataset::path() const { return impl_->path; }
bool Dataset::metadata_only() const { return impl_->metadata_only; }
const std::vector<std::string>& Dataset::subjects() const { return impl_->subjects; }

std::size_t Dataset::subject_index(std::string_view subject_id) const {
  const auto& s = impl_->subjects;
  auto it = std::find(s.begin(), s.end(), subject_id);
  if (it == s.end()) throw LookupError("unknown subject '" + std::string(subject_id) + "'");
  return static_cast<std::size_t>(it - s.begin());
}

std::vector<std::string> Dataset::categories() const { return impl_->category_order; }

const CategoryDescriptor& Dataset::descriptor(std::string_view subject_id, std::string_view category) const {
  auto s = impl_->lookup.find(std::string(subject_id));
  if (s == impl_->lookup.end()) throw LookupError("unknown subject '" + std::string(subject_id) + "'");
  auto c = s->second.find(std::string(category));
  if (c == s->second.end()) {
    throw LookupError("subject '" + std::string(subject_id) + "' has no category '" + std::string(category) + "'");
  }
  return impl_->descriptors[c->second];
}

std::vector<std::string> Dataset::channel_names(std::string_view category) const {
  auto it = impl_->names.find(std::string(category));
  if (it == impl_->names.end()) return {};
  return it->second;
}

const std::vector<ProvenanceEntry>& Dataset::provenance() const { return impl_->provenance; }

Tensor Dataset::read_region(std::string_view subject_id, std::string_view category,
                            const IndexExpression& expr) const {
  const CategoryDescriptor& d = descriptor(subject_id, category);
  const std::size_t k = d.spatial_rank();
  if (!expr.is_full()) {
    if (expr.start.size() != k || expr.size.size() != k) {
      throw RangeError("region rank " + std::to_string(expr.start.size()) + " does not match the " +
                       std::to_string(k) + " addressable axes of " + d.subject_id + "/" + d.category);
    }
    for (std::size_t a = 0; a < k; ++a) {
      if (expr.size[a] == 0 || expr.start[a] < 0 ||
          static_cast<std::uint64_t>(expr.start[a]) + expr.size[a] > d.shape[a]) {
        throw RangeError("region out of bounds on axis " + std::to_string(a) + " of " + d.subject_id + "/" +
                         d.category + " (shape " + shape_to_string(d.shape) + ")");
      }
    }
  }

  switch (d.storage) {
    case PayloadStorage::kInline: {
      Tensor t(DType::kFloat64, d.shape);
      std::copy(d.values.begin(), d.values.end(), t.values<double>().begin());
      t = t.astype(d.dtype);
      return expr.is_full() ? t : extract_subtensor(t, expr.start, expr.size);
    }
    case PayloadStorage::kFiles: {
      std::vector<fs::path> files(d.sources.begin(), d.sources.end());
      std::optional<DType> cast;
      if (auto it = impl_->dtypes.find(d.category); it != impl_->dtypes.end()) cast = it->second;
      Image img = detail::load_file_category(d.category, files, cast, impl_->transforms, &expr);
      const Shape expected = expr.is_full() ? d.shape : [&] {
        Shape s(expr.size.begin(), expr.size.end());
        if (k < d.shape.size()) s.push_back(d.shape.back());
        return s;
      }();
      if (img.tensor.shape() != expected || img.tensor.dtype() != d.dtype) {
        throw CorruptFileError("source files of " + d.subject_id + "/" + d.category +
                               " changed since the container was created");
      }
      return std::move(img.tensor);
    }
    case PayloadStorage::kPayload:
      break;
  }

  const std::size_t esize = dtype_size(d.dtype);
  if (expr.is_full()) {
    Tensor t(d.dtype, d.shape);
    impl_->pread_exact(t.bytes().data(), t.nbytes(), kContainerHeaderSize + d.byte_offset);
    return t;
  }

  // Contiguous block: the innermost addressable axes the region spans fully
  // plus the first partially covered axis outside them.
  std::size_t unit = esize;
  for (std::size_t a = k; a < d.shape.size(); ++a) unit *= d.shape[a];
  std::size_t split = k - 1;
  while (split > 0 && expr.start[split] == 0 && expr.size[split] == d.shape[split]) --split;
  std::size_t inner_elems = 1;  // spatial positions per full inner slab below `split`
  for (std::size_t a = split + 1; a < k; ++a) inner_elems *= d.shape[a];
  const std::size_t block_bytes = expr.size[split] * inner_elems * unit;

  std::vector<std::size_t> strides(k, 1);
  for (std::size_t a = k - 1; a-- > 0;) strides[a] = strides[a + 1] * d.shape[a + 1];

  Shape out_shape(expr.size.begin(), expr.size.end());
  if (k < d.shape.size()) out_shape.push_back(d.shape.back());
  Tensor out(d.dtype, out_shape);
  std::byte* dst = out.bytes().data();
  const std::uint64_t base = kContainerHeaderSize + d.byte_offset;

  std::vector<std::size_t> idx(split, 0);
  for (;;) {
    std::size_t pos = static_cast<std::size_t>(expr.start[split]) * strides[split];
    for (std::size_t a = 0; a < split; ++a) pos += (static_cast<std::size_t>(expr.start[a]) + idx[a]) * strides[a];
    impl_->pread_exact(dst, block_bytes, base + pos * unit);
    dst += block_bytes;
    std::size_t a = split;
    for (;;) {
      if (a == 0) return out;
      --a;
      if (++idx[a] < expr.size[a]) break;
      idx[a] = 0;
    }
  }
}

IoStats Dataset::io_stats() const {
  return {impl_->read_calls.load(), impl_->bytes_read.load()};
}

void Dataset::reset_io_stats() const {
  impl_->read_calls = 0;
  impl_->bytes_read = 0;
}

std::string Dataset::metadata_json() const { return impl_->meta.dump(2); }

// ---------------------------------------------------------------------------
// Inspection

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string numbers(const std::vector<double>& v) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v[i];
  }
  os << ')';
  return os.str();
}

}  // namespace

std::string inspect(const Dataset& ds) {
  std::ostringstream os;
  os << ds.path().filename().string() << "  (format " << kContainerFormatVersion << ", "
     << ds.subjects().size() << " subjects, " << (ds.metadata_only() ? "metadata only" : "full") << ")\n";
  const auto cats = ds.categories();

  os << "data/\n";
  for (const auto& cat : cats) {
    os << "  " << cat << "/\n";
    for (const auto& s : ds.subjects()) {
      const CategoryDescriptor* d = nullptr;
      try {
        d = &ds.descriptor(s, cat);
      } catch (const LookupError&) {
        continue;
      }
      os << "    " << s << "  " << dtype_name(d->dtype) << " " << shape_to_string(d->shape);
      if (d->storage != PayloadStorage::kPayload) os << "  [" << storage_name(d->storage) << "]";
      os << "\n";
    }
  }

  os << "meta/\n";
  os << "  subjects: " << join(ds.subjects()) << "\n";
  os << "  files/\n";
  for (const auto& p : ds.provenance()) {
    os << "    " << p.subject_id << "/" << p.category << "  " << p.source_path;
    if (p.sha256) os << "  sha256=" << *p.sha256;
    os << "\n";
  }
  os << "  info/\n";
  for (const auto& cat : cats) {
    for (const auto& s : ds.subjects()) {
      try {
        const auto& d = ds.descriptor(s, cat);
        if (!d.geometry) continue;
        os << "    " << s << "/" << cat << "  spacing=" << numbers(d.geometry->spacing)
           << " origin=" << numbers(d.geometry->origin) << " direction=" << numbers(d.geometry->direction)
           << "\n";
      } catch (const LookupError&) {
      }
    }
  }
  os << "  names/\n";
  for (const auto& cat : cats) os << "    " << cat << ": " << join(ds.channel_names(cat)) << "\n";
  os << "  shape/\n";
  for (const auto& cat : cats) {
    for (const auto& s : ds.subjects()) {
      try {
        os << "    " << s << "/" << cat << "  " << shape_to_string(ds.descriptor(s, cat).shape) << "\n";
      } catch (const LookupError&) {
      }
    }
  }
  return os.str();
}

}  // namespace mia
