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

#include <openssl/evp.h>

#include <array>
#include <cstring>
#include <fstream>
#include <memory>

#include "mia/imageio.hpp"
#include "text_util.hpp"

namespace mia {
namespace {

namespace fs = std::filesystem;

constexpr char kNpyMagic[] = "\x93NUMPY";

std::string_view descr_for(DType dtype) {
  switch (dtype) {
    case DType::kUInt8: return "|u1";
    case DType::kInt32: return "<i4";
    case DType::kFloat32: return "<f4";
    case DType::kFloat64: return "<f8";
  }
  throw ArgumentError("invalid dtype tag");
}

DType dtype_for_descr(const std::string& descr, const fs::path& path) {
  if (descr == "|u1" || descr == "<u1") return DType::kUInt8;
  if (descr == "<i4") return DType::kInt32;
  if (descr == "<f4") return DType::kFloat32;
  if (descr == "<f8") return DType::kFloat64;
  throw UnsupportedFormatError(path.string() + ": unsupported .npy dtype '" + descr + "'");
}

// Value text of `key` in the header dict, up to the next top-level comma.
std::string dict_value(const std::string& header, const std::string& key, const fs::path& path) {
  const std::string quoted = "'" + key + "'";
  auto pos = header.find(quoted);
  if (pos == std::string::npos) {
    throw CorruptFileError(path.string() + ": .npy header lacks '" + key + "'");
  }
  pos = header.find(':', pos + quoted.size());
  if (pos == std::string::npos) throw CorruptFileError(path.string() + ": malformed .npy header");
  ++pos;
  int depth = 0;
  std::size_t end = pos;
  for (; end < header.size(); ++end) {
    const char c = header[end];
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if ((c == ',' && depth == 0) || c == '}') break;
  }
  return detail::trim(header.substr(pos, end - pos));
}

Shape parse_shape(const std::string& text, const fs::path& path) {
  if (text.size() < 2 || text.front() != '(' || text.back() != ')') {
    throw CorruptFileError(path.string() + ": malformed .npy shape '" + text + "'");
  }
  Shape shape;
  for (const auto& part : detail::split(text.substr(1, text.size() - 2), ',')) {
    const std::string tok = detail::trim(part);
    if (tok.empty()) continue;
    double v = 0.0;
    if (!detail::parse_number(tok, v) || v < 0) {
      throw CorruptFileError(path.string() + ": malformed .npy shape '" + text + "'");
    }
    shape.push_back(static_cast<std::size_t>(v));
  }
  return shape;
}

}  // namespace

Tensor read_npy(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::array<char, 8> preamble{};
  in.read(preamble.data(), preamble.size());
  if (in.gcount() != 8 || std::memcmp(preamble.data(), kNpyMagic, 6) != 0) {
    throw UnsupportedFormatError(path.string() + ": not a .npy file");
  }
  const auto major = static_cast<unsigned char>(preamble[6]);
  std::size_t header_len = 0;
  if (major == 1) {
    unsigned char len[2];
    in.read(reinterpret_cast<char*>(len), 2);
    header_len = len[0] | (static_cast<std::size_t>(len[1]) << 8);
  } else if (major == 2) {
    unsigned char len[4];
    in.read(reinterpret_cast<char*>(len), 4);
    header_len = len[0] | (static_cast<std::size_t>(len[1]) << 8) |
                 (static_cast<std::size_t>(len[2]) << 16) | (static_cast<std::size_t>(len[3]) << 24);
  } else {
    throw UnsupportedFormatError(path.string() + ": unsupported .npy version " + std::to_string(major));
  }
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw CorruptFileError(path.string() + ": truncated .npy header");

  std::string descr = dict_value(header, "descr", path);
  if (descr.size() >= 2 && (descr.front() == '\'' || descr.front() == '"')) {
    descr = descr.substr(1, descr.size() - 2);
  }
  const DType dtype = dtype_for_descr(descr, path);
  if (dict_value(header, "fortran_order", path) != "False") {
    throw UnsupportedFormatError(path.string() + ": Fortran-ordered arrays are not supported");
  }
  Shape shape = parse_shape(dict_value(header, "shape", path), path);
  if (shape.empty()) throw UnsupportedFormatError(path.string() + ": 0-d arrays are not supported");
  if (shape.size() > kMaxRank) throw UnsupportedFormatError(path.string() + ": too many dimensions");
  for (auto e : shape) {
    if (e == 0) throw UnsupportedFormatError(path.string() + ": empty arrays are not supported");
  }

  Tensor tensor(dtype, std::move(shape));
  auto bytes = tensor.bytes();
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw CorruptFileError(path.string() + ": truncated .npy payload");
  }
  return tensor;
}

void write_npy(const Tensor& tensor, const fs::path& path) {
  if (tensor.empty()) throw ArgumentError("cannot write an empty tensor");
  std::string dict = "{'descr': '" + std::string(descr_for(tensor.dtype())) +
                     "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < tensor.rank(); ++i) {
    if (i) dict += ", ";
    dict += std::to_string(tensor.shape()[i]);
  }
  if (tensor.rank() == 1) dict += ",";
  dict += "), }";
  // Preamble (10 bytes) + header is padded to a multiple of 64, ending in '\n'.
  const std::size_t unpadded = 10 + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict += '\n';

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(kNpyMagic, 6);
  const char version[2] = {1, 0};
  out.write(version, 2);
  const auto len = static_cast<std::uint16_t>(dict.size());
  const char len_le[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
  out.write(len_le, 2);
  out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
  const auto bytes = tensor.bytes();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Image read_image(const fs::path& path) {
  const auto ext = path.extension();
  if (ext == ".mha" || ext == ".mhd") return read_metaimage(path);
  if (ext == ".npy") {
    Tensor t = read_npy(path);
    ImageGeometry g = ImageGeometry::identity(t.rank());
    return {std::move(t), std::move(g)};
  }
  throw UnsupportedFormatError("unsupported image file extension '" + ext.string() + "' (" +
                               path.string() + ")");
}

std::string hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 initialisation failed");
  }
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  if (in.bad()) throw IoError("read failed while hashing '" + path.string() + "'");
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

}  // namespace mia
