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

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "mia/imageio.hpp"
#include "text_util.hpp"

namespace mia {
namespace {

namespace fs = std::filesystem;

struct ElementCodec {
  std::string_view met_name;
  std::size_t file_size;
  DType dtype;
};

constexpr ElementCodec kCodecs[] = {
    {"MET_UCHAR", 1, DType::kUInt8},  {"MET_CHAR", 1, DType::kInt32},
    {"MET_SHORT", 2, DType::kInt32},  {"MET_USHORT", 2, DType::kInt32},
    {"MET_INT", 4, DType::kInt32},    {"MET_FLOAT", 4, DType::kFloat32},
    {"MET_DOUBLE", 8, DType::kFloat64},
};

const ElementCodec& codec_for(std::string_view met_name) {
  for (const auto& c : kCodecs) {
    if (c.met_name == met_name) return c;
  }
  throw UnsupportedFormatError("unsupported MetaImage ElementType '" + std::string(met_name) + "'");
}

std::string_view met_name_for(DType dtype) {
  switch (dtype) {
    case DType::kUInt8: return "MET_UCHAR";
    case DType::kInt32: return "MET_INT";
    case DType::kFloat32: return "MET_FLOAT";
    case DType::kFloat64: return "MET_DOUBLE";
  }
  throw ArgumentError("invalid dtype tag");
}

bool parse_bool(const std::string& v) {
  return v == "True" || v == "true" || v == "TRUE" || v == "1";
}

std::vector<double> parse_doubles(const std::string& v, const fs::path& path, std::string_view key) {
  std::vector<double> out;
  for (const auto& tok : detail::split_whitespace(v)) {
    double d = 0.0;
    if (!detail::parse_number(tok, d)) {
      throw CorruptFileError(path.string() + ": bad value '" + tok + "' for " + std::string(key));
    }
    out.push_back(d);
  }
  return out;
}

template <typename From, typename To>
void convert_elements(const std::byte* src, std::span<To> dst, bool swap_bytes) {
  for (std::size_t i = 0; i < dst.size(); ++i) {
    std::array<std::byte, sizeof(From)> raw;
    std::memcpy(raw.data(), src + i * sizeof(From), sizeof(From));
    if (swap_bytes) std::reverse(raw.begin(), raw.end());
    From v;
    std::memcpy(&v, raw.data(), sizeof(From));
    dst[i] = static_cast<To>(v);
  }
}

// Decodes the payload (file byte layout) into a tensor of the mapped dtype.
void decode_payload(const std::vector<std::byte>& payload, std::string_view met, bool msb,
                    Tensor& out) {
  const std::byte* src = payload.data();
  if (met == "MET_UCHAR") {
    auto dst = out.values<std::uint8_t>();
    std::memcpy(dst.data(), src, dst.size());
  } else if (met == "MET_CHAR") {
    convert_elements<std::int8_t>(src, out.values<std::int32_t>(), false);
  } else if (met == "MET_SHORT") {
    convert_elements<std::int16_t>(src, out.values<std::int32_t>(), msb);
  } else if (met == "MET_USHORT") {
    convert_elements<std::uint16_t>(src, out.values<std::int32_t>(), msb);
  } else if (met == "MET_INT") {
    if (msb) {
      convert_elements<std::int32_t>(src, out.values<std::int32_t>(), true);
    } else {
      std::memcpy(out.bytes().data(), src, out.nbytes());
    }
  } else if (met == "MET_FLOAT") {
    if (msb) {
      convert_elements<float>(src, out.values<float>(), true);
    } else {
      std::memcpy(out.bytes().data(), src, out.nbytes());
    }
  } else {
    if (msb) {
      convert_elements<double>(src, out.values<double>(), true);
    } else {
      std::memcpy(out.bytes().data(), src, out.nbytes());
    }
  }
}

std::vector<std::byte> read_exact(std::istream& in, std::size_t n, const fs::path& path) {
  std::vector<std::byte> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw CorruptFileError(path.string() + ": truncated payload (expected " + std::to_string(n) +
                           " bytes, got " + std::to_string(in.gcount()) + ")");
  }
  return buf;
}

std::vector<std::byte> read_rest(std::istream& in) {
  std::vector<std::byte> buf;
  constexpr std::size_t kChunk = 1 << 20;
  std::size_t used = 0;
  while (in) {
    buf.resize(used + kChunk);
    in.read(reinterpret_cast<char*>(buf.data() + used), kChunk);
    used += static_cast<std::size_t>(in.gcount());
  }
  buf.resize(used);
  return buf;
}

std::vector<std::byte> inflate_payload(const std::vector<std::byte>& compressed,
                                       std::size_t expected, const fs::path& path) {
  std::vector<std::byte> out(expected);
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw CorruptFileError(path.string() + ": zlib init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<std::byte*>(compressed.data()));
  zs.avail_in = static_cast<uInt>(compressed.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(expected);
  const int rc = inflate(&zs, Z_FINISH);
  const std::size_t produced = expected - zs.avail_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) {
    throw CorruptFileError(path.string() + ": compressed payload is truncated or corrupt (" +
                           std::to_string(produced) + " of " + std::to_string(expected) +
                           " bytes decoded)");
  }
  return out;
}

std::string join_numbers(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ' ';
    out += detail::format_double(values[i]);
  }
  return out;
}

}  // namespace

Image read_metaimage(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");

  // Header: "Key = Value" lines, terminated by ElementDataFile.
  std::map<std::string, std::string> header;
  std::string line;
  bool terminated = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (detail::trim(line).empty()) continue;
      throw CorruptFileError(path.string() + ": malformed header line '" + line + "'");
    }
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    header[key] = value;
    if (key == "ElementDataFile") {
      terminated = true;
      break;
    }
  }
  if (!terminated) throw CorruptFileError(path.string() + ": header has no ElementDataFile");

  auto get = [&](const std::string& key) -> const std::string* {
    auto it = header.find(key);
    return it == header.end() ? nullptr : &it->second;
  };

  const std::string* ndims_s = get("NDims");
  const std::string* dims_s = get("DimSize");
  const std::string* type_s = get("ElementType");
  if (!ndims_s || !dims_s || !type_s) {
    throw CorruptFileError(path.string() + ": header lacks NDims, DimSize or ElementType");
  }
  const ElementCodec& codec = codec_for(*type_s);
  const auto ndims_v = parse_doubles(*ndims_s, path, "NDims");
  const auto dims_v = parse_doubles(*dims_s, path, "DimSize");
  if (ndims_v.size() != 1 || ndims_v[0] < 1 || dims_v.size() != static_cast<std::size_t>(ndims_v[0])) {
    throw CorruptFileError(path.string() + ": DimSize does not match NDims");
  }
  const std::size_t n = dims_v.size();
  if (n + 1 > kMaxRank) throw UnsupportedFormatError(path.string() + ": too many dimensions");

  std::size_t channels = 1;
  if (const auto* c = get("ElementNumberOfChannels")) {
    channels = static_cast<std::size_t>(parse_doubles(*c, path, "ElementNumberOfChannels").at(0));
  }
  if (const auto* b = get("BinaryData"); b && !parse_bool(*b)) {
    throw UnsupportedFormatError(path.string() + ": ASCII MetaImage payloads are not supported");
  }
  bool msb = false;
  if (const auto* m = get("BinaryDataByteOrderMSB")) msb = parse_bool(*m);
  if (const auto* m = get("ElementByteOrderMSB")) msb = parse_bool(*m);
  bool compressed = false;
  if (const auto* c = get("CompressedData")) compressed = parse_bool(*c);

  // Geometry in file (x, y, z) order, then reversed.
  std::vector<double> spacing(n, 1.0), origin(n, 0.0), direction(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) direction[i * n + i] = 1.0;
  for (const char* key : {"ElementSpacing", "ElementSize"}) {
    if (const auto* s = get(key)) {
      spacing = parse_doubles(*s, path, key);
      break;
    }
  }
  for (const char* key : {"Offset", "Origin", "Position"}) {
    if (const auto* s = get(key)) {
      origin = parse_doubles(*s, path, key);
      break;
    }
  }
  for (const char* key : {"TransformMatrix", "Rotation", "Orientation"}) {
    if (const auto* s = get(key)) {
      direction = parse_doubles(*s, path, key);
      break;
    }
  }
  if (spacing.size() != n || origin.size() != n || direction.size() != n * n) {
    throw CorruptFileError(path.string() + ": geometry fields do not match NDims");
  }

  Shape shape(n);
  ImageGeometry geometry;
  geometry.spacing.resize(n);
  geometry.origin.resize(n);
  geometry.direction.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    shape[i] = static_cast<std::size_t>(dims_v[n - 1 - i]);
    geometry.spacing[i] = spacing[n - 1 - i];
    geometry.origin[i] = origin[n - 1 - i];
    for (std::size_t j = 0; j < n; ++j) {
      // TransformMatrix row a is the direction of file axis a.
      const std::size_t axis = n - 1 - j;
      const std::size_t phys = n - 1 - i;
      geometry.direction[i * n + j] = direction[axis * n + phys];
    }
  }
  if (channels > 1) shape.push_back(channels);

  Tensor tensor(codec.dtype, shape);
  const std::size_t payload_bytes = tensor.size() * codec.file_size;

  std::vector<std::byte> raw;
  const std::string& data_file = header["ElementDataFile"];
  std::ifstream external;
  std::istream* src = &in;
  fs::path data_path = path;
  if (data_file != "LOCAL" && data_file != "Local" && data_file != "local") {
    if (data_file.rfind("LIST", 0) == 0 || data_file.find('%') != std::string::npos) {
      throw UnsupportedFormatError(path.string() + ": multi-file MetaImage payloads are not supported");
    }
    data_path = path.parent_path() / data_file;
    external.open(data_path, std::ios::binary);
    if (!external) throw IoError("cannot open MetaImage payload '" + data_path.string() + "'");
    src = &external;
  }

  if (compressed) {
    std::vector<std::byte> packed;
    if (const auto* cs = get("CompressedDataSize")) {
      const auto size = static_cast<std::size_t>(parse_doubles(*cs, path, "CompressedDataSize").at(0));
      packed = read_exact(*src, size, data_path);
    } else {
      packed = read_rest(*src);
    }
    raw = inflate_payload(packed, payload_bytes, data_path);
  } else {
    raw = read_exact(*src, payload_bytes, data_path);
  }
  decode_payload(raw, codec.met_name, msb, tensor);
  return {std::move(tensor), std::move(geometry)};
}

void write_metaimage(const Tensor& tensor, const ImageGeometry& geometry, const fs::path& path,
                     bool compressed) {
  geometry.validate();
  const std::size_t n = geometry.ndim();
  if (n < 2 || n > 3) throw ArgumentError("MetaImage writer expects 2 or 3 spatial axes, got " + std::to_string(n));
  if (tensor.rank() != n && tensor.rank() != n + 1) {
    throw ArgumentError("tensor of shape " + shape_to_string(tensor.shape()) + " does not match a " +
                        std::to_string(n) + "-D geometry");
  }
  const std::size_t channels = tensor.rank() == n + 1 ? tensor.shape().back() : 1;

  std::vector<double> spacing(n), origin(n), direction(n * n), dims(n);
  for (std::size_t i = 0; i < n; ++i) {
    spacing[i] = geometry.spacing[n - 1 - i];
    origin[i] = geometry.origin[n - 1 - i];
    dims[i] = static_cast<double>(tensor.shape()[n - 1 - i]);
  }
  for (std::size_t axis = 0; axis < n; ++axis) {
    for (std::size_t phys = 0; phys < n; ++phys) {
      direction[axis * n + phys] = geometry.direction[(n - 1 - phys) * n + (n - 1 - axis)];
    }
  }

  const auto payload = tensor.bytes();
  std::vector<Bytef> packed;
  if (compressed) {
    uLongf packed_size = compressBound(static_cast<uLong>(payload.size()));
    packed.resize(packed_size);
    const int rc = compress2(packed.data(), &packed_size,
                             reinterpret_cast<const Bytef*>(payload.data()),
                             static_cast<uLong>(payload.size()), 6);
    if (rc != Z_OK) throw IoError("zlib compression failed for '" + path.string() + "'");
    packed.resize(packed_size);
  }

  const bool detached = path.extension() == ".mhd";
  fs::path data_path = path;
  if (detached) data_path.replace_extension(compressed ? ".zraw" : ".raw");

  std::ostringstream h;
  h << "ObjectType = Image\n";
  h << "NDims = " << n << "\n";
  h << "BinaryData = True\n";
  h << "BinaryDataByteOrderMSB = False\n";
  h << "CompressedData = " << (compressed ? "True" : "False") << "\n";
  if (compressed) h << "CompressedDataSize = " << packed.size() << "\n";
  h << "TransformMatrix = " << join_numbers(direction) << "\n";
  h << "Offset = " << join_numbers(origin) << "\n";
  h << "CenterOfRotation = " << join_numbers(std::vector<double>(n, 0.0)) << "\n";
  h << "ElementSpacing = " << join_numbers(spacing) << "\n";
  h << "DimSize = " << join_numbers(dims) << "\n";
  if (channels > 1) h << "ElementNumberOfChannels = " << channels << "\n";
  h << "ElementType = " << met_name_for(tensor.dtype()) << "\n";
  h << "ElementDataFile = " << (detached ? data_path.filename().string() : std::string("LOCAL")) << "\n";

  auto write_payload = [&](std::ofstream& out) {
    if (compressed) {
      out.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
    } else {
      out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    }
  };

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  const std::string header = h.str();
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  if (detached) {
    std::ofstream data(data_path, std::ios::binary | std::ios::trunc);
    if (!data) throw IoError("cannot write '" + data_path.string() + "'");
    write_payload(data);
    if (!data) throw IoError("write failed for '" + data_path.string() + "'");
  } else {
    write_payload(out);
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace mia
