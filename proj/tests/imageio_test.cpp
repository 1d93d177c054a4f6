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

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <random>

#include "mia/imageio.hpp"
#include "test_util.hpp"

namespace mia {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;
using testing::sha256sum;

const fs::path kData = MIA_TEST_DATA_DIR;

nlohmann::json fixture(const std::string& name) {
  std::ifstream in(kData / "fixtures.json");
  return nlohmann::json::parse(in).at(name);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void check_against_fixture(const Image& img, const nlohmann::json& fx) {
  EXPECT_EQ(img.tensor.shape(), fx.at("shape").get<Shape>());
  EXPECT_EQ(img.geometry.spacing, fx.at("spacing").get<std::vector<double>>());
  EXPECT_EQ(img.geometry.origin, fx.at("origin").get<std::vector<double>>());
  EXPECT_EQ(img.geometry.direction, fx.at("direction").get<std::vector<double>>());
  const auto expected = fx.at("values").get<std::vector<double>>();
  const auto actual = img.tensor.to_doubles();
  ASSERT_EQ(actual.size(), expected.size());
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ASSERT_EQ(actual[i], expected[i])
        << "element " << i;
  }
}

TEST(MetaImage, ReadsThirdPartyUncompressedFile) {
  const Image img = read_metaimage(kData / "itk_uchar.mha");
  EXPECT_EQ(img.tensor.dtype(), DType::kUInt8);
  check_against_fixture(img, fixture("itk_uchar.mha"));
  // ElementSpacing = 1 2 3 in file order is (3, 2, 1) in (z, y, x).
  EXPECT_EQ(img.geometry.spacing, (std::vector<double>{3, 2, 1}));
}

TEST(MetaImage, ReadsThirdPartyCompressedFile) {
  const Image img = read_metaimage(kData / "itk_float_compressed.mha");
  EXPECT_EQ(img.tensor.dtype(), DType::kFloat32);
  check_against_fixture(img, fixture("itk_float_compressed.mha"));
}

TEST(MetaImage, ReadsThirdPartyDetachedShortFile) {
  const Image img = read_metaimage(kData / "itk_short.mhd");
  EXPECT_EQ(img.tensor.dtype(), DType::kInt32);
  check_against_fixture(img, fixture("itk_short.mhd"));
}

TEST(MetaImage, HandWrittenHeaderSpacingIsReversed) {
  TempDir dir;
  const fs::path p = dir / "hand.mha";
  {
    std::ofstream out(p, std::ios::binary);
    out << "ObjectType = Image\nNDims = 3\nBinaryData = True\nBinaryDataByteOrderMSB = False\n"
           "ElementSpacing = 1 2 3\nDimSize = 2 2 2\nElementType = MET_UCHAR\nElementDataFile = LOCAL\n";
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>(i));
  }
  const Image img = read_metaimage(p);
  EXPECT_EQ(img.geometry.spacing, (std::vector<double>{3, 2, 1}));
  EXPECT_EQ(img.geometry.origin, (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(img.geometry.direction, ImageGeometry::identity(3).direction);
  EXPECT_EQ(img.tensor, Tensor(Shape{2, 2, 2}, std::vector<std::uint8_t>{0, 1, 2, 3, 4, 5, 6, 7}));
}

TEST(MetaImage, RoundTripAllDtypesAndLayouts) {
  TempDir dir;
  std::mt19937_64 rng(11);
  ImageGeometry g = ImageGeometry::with_spacing({3.0, 0.1, 1.0 / 3.0});
  g.origin = {-12.5, 1e-7, 42.0};
  g.direction = {0, 0, 1, 1, 0, 0, 0, 1, 0};
  int k = 0;
  for (DType dtype : {DType::kUInt8, DType::kInt32, DType::kFloat32, DType::kFloat64}) {
    for (const char* ext : {".mha", ".mhd"}) {
      for (bool compressed : {false, true}) {
        for (bool channels : {false, true}) {
          Shape shape{2, 3, 4};
          if (channels) shape.push_back(2);
          const Tensor t = testing::random_tensor(dtype, shape, rng);
          const fs::path p = dir / ("img" + std::to_string(k++) + ext);
          write_metaimage(t, g, p, compressed);
          const Image back = read_metaimage(p);
          EXPECT_EQ(back.tensor, t) << p;
          EXPECT_EQ(back.geometry, g) << p;
        }
      }
    }
  }
}

TEST(MetaImage, CompressedTwinDecodesIdentically) {
  TempDir dir;
  std::mt19937_64 rng(5);
  const Tensor t = testing::random_tensor(DType::kFloat32, {4, 5, 6}, rng);
  const auto g = ImageGeometry::identity(3);
  write_metaimage(t, g, dir / "raw.mha", false);
  write_metaimage(t, g, dir / "zip.mha", true);
  EXPECT_EQ(read_metaimage(dir / "raw.mha").tensor, read_metaimage(dir / "zip.mha").tensor);
  EXPECT_NE(slurp(dir / "raw.mha"), slurp(dir / "zip.mha"));
}

TEST(MetaImage, CompressionShrinksConstantVolume) {
  TempDir dir;
  const Tensor t(Shape{64, 64, 64}, std::vector<float>(64 * 64 * 64, 3.0f));
  write_metaimage(t, ImageGeometry::identity(3), dir / "raw.mha", false);
  write_metaimage(t, ImageGeometry::identity(3), dir / "zip.mha", true);
  EXPECT_LT(fs::file_size(dir / "zip.mha"), fs::file_size(dir / "raw.mha"));
}

TEST(MetaImage, HeaderUsesMetaIoElementNames) {
  TempDir dir;
  const Tensor t(Shape{2, 2}, std::vector<float>{1, 2, 3, 4});
  write_metaimage(t, ImageGeometry::identity(2), dir / "f.mha");
  const std::string text = slurp(dir / "f.mha");
  EXPECT_NE(text.find("\nElementType = MET_FLOAT\n"), std::string::npos);
  EXPECT_NE(text.find("\nElementDataFile = LOCAL\n"), std::string::npos);
  EXPECT_EQ(text.rfind("ObjectType = Image\nNDims = 2\n", 0), 0u);
}

TEST(MetaImage, WriterRejectsBadInputs) {
  TempDir dir;
  const Tensor t(Shape{4}, std::vector<float>{1, 2, 3, 4});
  EXPECT_THROW(write_metaimage(t, ImageGeometry::identity(1), dir / "x.mha"), ArgumentError);
  const Tensor v(Shape{2, 2}, std::vector<float>{1, 2, 3, 4});
  EXPECT_THROW(write_metaimage(v, ImageGeometry::identity(2), dir / "missing" / "x.mha"), IoError);
}

TEST(MetaImage, UnknownElementTypeIsUnsupported) {
  TempDir dir;
  std::ofstream(dir / "u.mha") << "NDims = 2\nDimSize = 1 1\nElementType = MET_ULONG_LONG\nElementDataFile = LOCAL\n";
  EXPECT_THROW(read_metaimage(dir / "u.mha"), UnsupportedFormatError);
}

TEST(MetaImage, TruncatedPayloadIsCorrupt) {
  TempDir dir;
  std::mt19937_64 rng(4);
  const Tensor t = testing::random_tensor(DType::kFloat64, {8, 8}, rng);
  for (bool compressed : {false, true}) {
    const fs::path p = dir / (compressed ? "z.mha" : "r.mha");
    write_metaimage(t, ImageGeometry::identity(2), p, compressed);
    fs::resize_file(p, fs::file_size(p) - 20);
    EXPECT_THROW(read_metaimage(p), CorruptFileError) << p;
  }
}

TEST(Npy, ReadsNumpyWrittenFiles) {
  EXPECT_EQ(read_npy(kData / "numpy_f4.npy"), Tensor(Shape{2, 3}, std::vector<float>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(read_npy(kData / "numpy_u1.npy"), Tensor(Shape{3}, std::vector<std::uint8_t>{0, 1, 255}));
  const Tensor i4 = read_npy(kData / "numpy_i4.npy");
  EXPECT_EQ(i4.shape(), (Shape{2, 3, 4}));
  EXPECT_EQ(i4.values<std::int32_t>()[0], -12);
  EXPECT_EQ(i4.values<std::int32_t>()[23], 11);
  EXPECT_EQ(read_npy(kData / "numpy_f8.npy"), Tensor(Shape{5}, std::vector<double>{0, 0.25, 0.5, 0.75, 1}));
}

TEST(Npy, RejectsUnsupportedLayouts) {
  EXPECT_THROW(read_npy(kData / "numpy_fortran.npy"), UnsupportedFormatError);
  EXPECT_THROW(read_npy(kData / "numpy_0d.npy"), UnsupportedFormatError);
  EXPECT_THROW(read_npy(kData / "numpy_i8.npy"), UnsupportedFormatError);
}

TEST(Npy, HeaderDescrAndAlignment) {
  TempDir dir;
  write_npy(Tensor(Shape{2, 2}, std::vector<float>{1, 2, 3, 4}), dir / "a.npy");
  const std::string bytes = slurp(dir / "a.npy");
  EXPECT_EQ(bytes.substr(0, 8), std::string("\x93NUMPY\x01\x00", 8));
  const std::size_t header_len = static_cast<unsigned char>(bytes[8]) | (static_cast<unsigned char>(bytes[9]) << 8);
  EXPECT_EQ((10 + header_len) % 64, 0u);
  const std::string header = bytes.substr(10, header_len);
  EXPECT_EQ(header.rfind("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2), }", 0), 0u);
  EXPECT_EQ(header.back(), '\n');
  EXPECT_EQ(bytes.size(), 10 + header_len + 16);
}

TEST(Npy, RoundTripLargeVolume) {
  TempDir dir;
  std::mt19937_64 rng(1);
  const Tensor t = testing::random_tensor(DType::kFloat32, {181, 217, 181}, rng);
  write_npy(t, dir / "v.npy");
  EXPECT_EQ(read_npy(dir / "v.npy"), t);
}

TEST(Npy, RoundTripEveryDtypeAndRank) {
  TempDir dir;
  std::mt19937_64 rng(2);
  int k = 0;
  for (DType dtype : {DType::kUInt8, DType::kInt32, DType::kFloat32, DType::kFloat64}) {
    for (Shape shape : {Shape{7}, Shape{3, 1}, Shape{2, 3, 4, 5, 2}}) {
      const Tensor t = testing::random_tensor(dtype, shape, rng);
      const fs::path p = dir / ("t" + std::to_string(k++) + ".npy");
      write_npy(t, p);
      EXPECT_EQ(read_npy(p), t);
    }
  }
}

TEST(HashFile, EmptyFileConstant) {
  TempDir dir;
  std::ofstream(dir / "empty").close();
  EXPECT_EQ(hash_file(dir / "empty"), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(HashFile, DeterministicAndSensitiveToSingleByte) {
  TempDir dir;
  std::mt19937_64 rng(9);
  std::string content(3 * (1 << 20) + 17, '\0');
  for (auto& c : content) c = static_cast<char>(rng());
  std::ofstream(dir / "a", std::ios::binary) << content;
  content[content.size() / 2] ^= 0x01;
  std::ofstream(dir / "b", std::ios::binary) << content;

  const std::string a = hash_file(dir / "a");
  EXPECT_EQ(a, hash_file(dir / "a"));
  EXPECT_NE(a, hash_file(dir / "b"));
  const std::string oracle = sha256sum(dir / "a");
  if (oracle.empty()) GTEST_SKIP() << "sha256sum not available";
  EXPECT_EQ(a, oracle);
  EXPECT_EQ(hash_file(dir / "b"), sha256sum(dir / "b"));
}

TEST(HashFile, MissingFileIsIoError) {
  EXPECT_THROW(hash_file("/nonexistent/definitely/not/here"), IoError);
}

TEST(ReadImage, DispatchesOnExtension) {
  const Image img = read_image(kData / "numpy_f4.npy");
  EXPECT_EQ(img.geometry, ImageGeometry::identity(2));
  EXPECT_THROW(read_image("scan.nii.gz"), UnsupportedFormatError);
}

}  // namespace
}  // namespace mia
