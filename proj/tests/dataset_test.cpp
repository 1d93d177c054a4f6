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

#include <fstream>
#include <cstring>
#include <random>
#include <thread>

#include "dataset_fixture.hpp"
#include "mia/dataset.hpp"
#include "mia/error.hpp"
#include "mia/intensity.hpp"

namespace mia {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

const Shape kShape{9, 11, 7};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(CreateDataset, StacksChannelFilesAndKeepsPlanOrder) {
  TempDir dir;
  const auto plan = testing::write_subjects(dir.path(), 4, kShape);
  const auto summary = create_dataset(plan, dir / "ds.mia");
  EXPECT_EQ(summary.subjects, 4u);
  EXPECT_EQ(summary.categories, (std::vector<std::string>{"images", "labels", "mask", "numerical", "gender"}));

  const Dataset ds = Dataset::open(dir / "ds.mia");
  EXPECT_EQ(ds.subjects(), (std::vector<std::string>{"Subject_1", "Subject_2", "Subject_3", "Subject_4"}));
  for (const auto& s : ds.subjects()) {
    const auto& d = ds.descriptor(s, "images");
    EXPECT_EQ(d.shape, (Shape{9, 11, 7, 2}));
    EXPECT_EQ(d.dtype, DType::kFloat32);
    EXPECT_EQ(d.byte_offset % kPayloadAlignment, 0u);
    EXPECT_EQ(ds.descriptor(s, "labels").shape, (Shape{9, 11, 7, 1}));
    EXPECT_EQ(ds.descriptor(s, "numerical").shape, (Shape{2}));
    EXPECT_EQ(ds.descriptor(s, "numerical").dtype, DType::kFloat64);
    EXPECT_EQ(ds.descriptor(s, "gender").dtype, DType::kUInt8);
  }
  EXPECT_EQ(ds.channel_names("images"), (std::vector<std::string>{"T1", "T2"}));

  // Channel c of the stored images equals the c-th source file.
  const auto& files = std::get<FileList>(plan.subjects[2].categories[0].second);
  const Tensor images = ds.read_region("Subject_3", "images");
  for (std::size_t c = 0; c < 2; ++c) {
    const Tensor source = read_metaimage(files[c]).tensor;
    const auto src = source.values<float>();
    const auto all = images.values<float>();
    for (std::size_t i = 0; i < src.size(); ++i) ASSERT_EQ(all[i * 2 + c], src[i]);
  }
  const Tensor num = ds.read_region("Subject_3", "numerical");
  EXPECT_EQ(num.to_doubles(), std::get<InlineValues>(plan.subjects[2].categories[3].second).values);
}

TEST(CreateDataset, PayloadRegionsDoNotOverlap) {
  TempDir dir;
  create_dataset(testing::write_subjects(dir.path(), 3, kShape), dir / "ds.mia");
  const Dataset ds = Dataset::open(dir / "ds.mia");
  std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
  for (const auto& s : ds.subjects()) {
    for (const auto& c : ds.categories()) {
      const auto& d = ds.descriptor(s, c);
      ranges.emplace_back(d.byte_offset, d.byte_offset + d.nbytes());
    }
  }
  std::sort(ranges.begin(), ranges.end());
  for (std::size_t i = 1; i < ranges.size(); ++i) EXPECT_LE(ranges[i - 1].second, ranges[i].first);
}

TEST(CreateDataset, EmptyPlan) {
  TempDir dir;
  const auto summary = create_dataset(CreationPlan{}, dir / "empty.mia");
  EXPECT_EQ(summary.subjects, 0u);
  const Dataset ds = Dataset::open(dir / "empty.mia");
  EXPECT_TRUE(ds.subjects().empty());
  EXPECT_NE(inspect(ds).find("0 subjects"), std::string::npos);
}

TEST(CreateDataset, RecordedHashesMatchIndependentDigest) {
  TempDir dir;
  auto plan = testing::write_subjects(dir.path(), 2, kShape);
  plan.record_hashes = true;
  create_dataset(plan, dir / "ds.mia");
  const Dataset ds = Dataset::open(dir / "ds.mia");
  ASSERT_EQ(ds.provenance().size(), 2u * 4u);  // T1, T2, GT, MASK per subject
  for (const auto& p : ds.provenance()) {
    ASSERT_TRUE(p.sha256.has_value());
    EXPECT_EQ(*p.sha256, hash_file(p.source_path));
    const std::string oracle = testing::sha256sum(p.source_path);
    if (!oracle.empty()) EXPECT_EQ(*p.sha256, oracle);
  }
}

TEST(CreateDataset, ProvenanceWithoutHashesAndOmitted) {
  TempDir dir;
  auto plan = testing::write_subjects(dir.path(), 1, kShape);
  create_dataset(plan, dir / "a.mia");
  const Dataset a = Dataset::open(dir / "a.mia");
  ASSERT_EQ(a.provenance().size(), 4u);
  EXPECT_FALSE(a.provenance()[0].sha256.has_value());
  EXPECT_EQ(a.provenance()[0].category, "images");
  plan.omit_provenance = true;
  create_dataset(plan, dir / "b.mia");
  EXPECT_TRUE(Dataset::open(dir / "b.mia").provenance().empty());
}

TEST(CreateDataset, ShapeMismatchNamesSubjectAndCategory) {
  TempDir dir;
  auto plan = testing::write_subjects(dir.path(), 2, kShape);
  const fs::path odd = dir / "odd.mha";
  write_metaimage(Tensor(DType::kUInt8, Shape{9, 11, 6}), ImageGeometry::identity(3), odd);
  plan.subjects[1].categories[1].second = FileList{odd};
  try {
    create_dataset(plan, dir / "ds.mia");
    FAIL() << "expected CreationError";
  } catch (const CreationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("Subject_2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("labels"), std::string::npos) << msg;
  }
}

TEST(CreateDataset, ChannelFilesOfDifferentShapeRejected) {
  TempDir dir;
  auto plan = testing::write_subjects(dir.path(), 1, kShape);
  const fs::path odd = dir / "odd.mha";
  write_metaimage(Tensor(DType::kFloat32, Shape{9, 11, 6}), ImageGeometry::identity(3), odd);
  std::get<FileList>(plan.subjects[0].categories[0].second)[1] = odd;
  EXPECT_THROW(create_dataset(plan, dir / "ds.mia"), CreationError);
}

TEST(CreateDataset, DuplicateSubjectRejected) {
  TempDir dir;
  auto plan = testing::write_subjects(dir.path(), 2, kShape);
  plan.subjects[1].id = plan.subjects[0].id;
  EXPECT_THROW(create_dataset(plan, dir / "ds.mia"), CreationError);
}

TEST(CreateDataset, MissingSourceIsCreationError) {
  TempDir dir;
  auto plan = testing::write_subjects(dir.path(), 1, kShape);
  plan.subjects[0].categories[1].second = FileList{dir / "nope.mha"};
  EXPECT_THROW(create_dataset(plan, dir / "ds.mia"), CreationError);
}

TEST(CreateDataset, ByteIdenticalAcrossRuns) {
  TempDir dir;
  auto plan = testing::write_subjects(dir.path(), 3, kShape);
  plan.record_hashes = true;
  create_dataset(plan, dir / "a.mia");
  create_dataset(plan, dir / "b.mia");
  EXPECT_EQ(slurp(dir / "a.mia"), slurp(dir / "b.mia"));
}

TEST(CreateDataset, WriteTimeTransformsApplyToListedCategories) {
  TempDir dir;
  auto plan = testing::write_subjects(dir.path(), 1, kShape);
  plan.transforms.push_back({CreationTransform::Kind::kZNormalize, {"images"}, 0, 1, ""});
  create_dataset(plan, dir / "ds.mia");
  const Dataset ds = Dataset::open(dir / "ds.mia");
  const auto& files = std::get<FileList>(plan.subjects[0].categories[0].second);
  std::vector<Tensor> parts{read_image(files[0]).tensor, read_image(files[1]).tensor};
  EXPECT_EQ(ds.read_region("Subject_1", "images"), znormalize(stack_channels(parts), true));
  // labels untouched
  EXPECT_EQ(ds.read_region("Subject_1", "labels").values<std::uint8_t>()[0],
            read_image(std::get<FileList>(plan.subjects[0].categories[1].second)[0])
                .tensor.values<std::uint8_t>()[0]);
}

TEST(CreateDataset, CustomTransformHook) {
  register_creation_transform("blank_first_slice", [](const Tensor& t, const ImageGeometry&) {
    Tensor out = t;
    const std::size_t per_slice = t.size() / t.shape()[0];
    auto v = out.values<float>();
    std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(per_slice), 0.0f);
    return out;
  });
  TempDir dir;
  auto plan = testing::write_subjects(dir.path(), 1, kShape);
  CreationTransform t;
  t.kind = CreationTransform::Kind::kCustom;
  t.name = "blank_first_slice";
  plan.transforms.push_back(t);
  create_dataset(plan, dir / "ds.mia");
  const Dataset ds = Dataset::open(dir / "ds.mia");
  const Tensor slice0 = ds.read_region("Subject_1", "images", {{0, 0, 0}, {1, 11, 7}});
  for (float v : slice0.values<float>()) ASSERT_EQ(v, 0.0f);

  t.name = "unregistered";
  plan.transforms = {t};
  EXPECT_THROW(create_dataset(plan, dir / "x.mia"), CreationError);
}

TEST(CreateDataset, DtypeConversion) {
  TempDir dir;
  auto plan = testing::write_subjects(dir.path(), 1, kShape);
  plan.dtypes["images"] = DType::kFloat64;
  create_dataset(plan, dir / "ds.mia");
  EXPECT_EQ(Dataset::open(dir / "ds.mia").descriptor("Subject_1", "images").dtype, DType::kFloat64);
}

// ---------------------------------------------------------------------------

TEST(MetadataDataset, SmallAndReadsAgreeWithFullContainer) {
  TempDir dir;
  auto plan = testing::write_subjects(dir.path(), 3, Shape{20, 24, 18});
  const auto full = create_dataset(plan, dir / "full.mia");
  const auto meta = create_metadata_dataset(plan, dir / "meta.mia");
  EXPECT_EQ(meta.payload_bytes, 0u);
  EXPECT_EQ(full.payload_bytes, 3u * (20 * 24 * 18) * (2 * 4 + 1 + 1) + 3u * (16 + 1));
  EXPECT_LT(fs::file_size(dir / "meta.mia"), 64u * 1024);
  EXPECT_GT(fs::file_size(dir / "full.mia"), full.payload_bytes);

  const Dataset a = Dataset::open(dir / "full.mia");
  const Dataset b = Dataset::open(dir / "meta.mia");
  EXPECT_TRUE(b.metadata_only());
  std::mt19937_64 rng(11);
  for (const auto& s : a.subjects()) {
    for (const auto& c : a.categories()) {
      EXPECT_EQ(a.descriptor(s, c).shape, b.descriptor(s, c).shape);
      EXPECT_EQ(a.descriptor(s, c).geometry, b.descriptor(s, c).geometry);
      ASSERT_EQ(a.read_region(s, c), b.read_region(s, c)) << s << "/" << c;
    }
    for (int k = 0; k < 20; ++k) {
      IndexExpression e;
      for (std::size_t ax = 0; ax < 3; ++ax) {
        const std::size_t ext = a.descriptor(s, "images").shape[ax];
        const std::size_t lo = std::uniform_int_distribution<std::size_t>(0, ext - 1)(rng);
        e.start.push_back(static_cast<std::int64_t>(lo));
        e.size.push_back(std::uniform_int_distribution<std::size_t>(1, ext - lo)(rng));
      }
      ASSERT_EQ(a.read_region(s, "images", e), b.read_region(s, "images", e));
      ASSERT_EQ(a.read_region(s, "labels", e), b.read_region(s, "labels", e));
    }
  }
}

TEST(MetadataDataset, TransformsReappliedOnLoad) {
  TempDir dir;
  auto plan = testing::write_subjects(dir.path(), 1, kShape);
  plan.transforms.push_back({CreationTransform::Kind::kRescale, {"images"}, -1, 1, ""});
  create_dataset(plan, dir / "full.mia");
  create_metadata_dataset(plan, dir / "meta.mia");
  const Dataset a = Dataset::open(dir / "full.mia");
  const Dataset b = Dataset::open(dir / "meta.mia");
  EXPECT_EQ(a.read_region("Subject_1", "images"), b.read_region("Subject_1", "images"));
  const IndexExpression e{{2, 3, 1}, {4, 4, 4}};
  EXPECT_EQ(a.read_region("Subject_1", "images", e), b.read_region("Subject_1", "images", e));
}

TEST(MetadataDataset, DeletedSourceIsDangling) {
  TempDir dir;
  auto plan = testing::write_subjects(dir.path(), 1, kShape);
  create_metadata_dataset(plan, dir / "meta.mia");
  const fs::path gone = std::get<FileList>(plan.subjects[0].categories[1].second)[0];
  fs::remove(gone);
  const Dataset ds = Dataset::open(dir / "meta.mia");
  try {
    ds.read_region("Subject_1", "labels");
    FAIL() << "expected DanglingSourceError";
  } catch (const DanglingSourceError& e) {
    EXPECT_EQ(e.path(), gone.string());
    EXPECT_NE(std::string(e.what()).find(gone.string()), std::string::npos);
  }
  EXPECT_NO_THROW(ds.read_region("Subject_1", "images"));
}

TEST(MetadataDataset, CompressedSourcesReadIdentically) {
  TempDir a_dir, b_dir;
  auto plain = testing::write_subjects(a_dir.path(), 1, kShape, 5, false);
  auto packed = testing::write_subjects(b_dir.path(), 1, kShape, 5, true);
  create_metadata_dataset(plain, a_dir / "meta.mia");
  create_metadata_dataset(packed, b_dir / "meta.mia");
  const Dataset a = Dataset::open(a_dir / "meta.mia");
  const Dataset b = Dataset::open(b_dir / "meta.mia");
  EXPECT_EQ(a.read_region("Subject_1", "images"), b.read_region("Subject_1", "images"));
}

TEST(MetadataDataset, ProvenanceRequired) {
  TempDir dir;
  auto plan = testing::write_subjects(dir.path(), 1, kShape);
  plan.omit_provenance = true;
  EXPECT_THROW(create_metadata_dataset(plan, dir / "meta.mia"), CreationError);
}

// ---------------------------------------------------------------------------

TEST(OpenDataset, BadMagic) {
  TempDir dir;
  std::ofstream(dir / "x.mia") << std::string(200, 'x');
  EXPECT_THROW(Dataset::open(dir / "x.mia"), NotADatasetError);
  std::ofstream(dir / "tiny.mia") << "ab";
  EXPECT_THROW(Dataset::open(dir / "tiny.mia"), NotADatasetError);
  EXPECT_THROW(Dataset::open(dir / "absent.mia"), IoError);
}

TEST(OpenDataset, VersionMismatch) {
  TempDir dir;
  create_dataset(testing::write_subjects(dir.path(), 1, kShape), dir / "ds.mia");
  std::string bytes = slurp(dir / "ds.mia");
  bytes[6] = '\2';
  std::ofstream(dir / "v2.mia", std::ios::binary) << bytes;
  EXPECT_THROW(Dataset::open(dir / "v2.mia"), VersionError);
}

TEST(OpenDataset, TruncatedIsCorrupt) {
  TempDir dir;
  create_dataset(testing::write_subjects(dir.path(), 2, kShape), dir / "ds.mia");
  const std::string bytes = slurp(dir / "ds.mia");
  for (std::size_t keep : {std::size_t{10}, std::size_t{64}, bytes.size() / 2, bytes.size() - 5}) {
    std::ofstream(dir / "cut.mia", std::ios::binary | std::ios::trunc) << bytes.substr(0, keep);
    EXPECT_THROW(Dataset::open(dir / "cut.mia"), CorruptFileError) << "kept " << keep;
  }
}

TEST(Inspect, ListsGroupsAndIsStable) {
  TempDir dir;
  auto plan = testing::write_subjects(dir.path(), 4, kShape);
  plan.record_hashes = true;
  create_dataset(plan, dir / "ds.mia");
  const std::string a = inspect(Dataset::open(dir / "ds.mia"));
  const std::string b = inspect(Dataset::open(dir / "ds.mia"));
  EXPECT_EQ(a, b);
  for (const char* group : {"data/", "  images/", "  labels/", "  mask/", "  numerical/", "  gender/", "meta/",
                            "  subjects:", "  files/", "  info/", "  names/", "  shape/"}) {
    EXPECT_NE(a.find(std::string(group) + (group[std::strlen(group) - 1] == '/' ? "\n" : "")),
              std::string::npos)
        << group;
  }
  EXPECT_NE(a.find("Subject_4  float32 9x11x7x2"), std::string::npos) << a;
  EXPECT_NE(a.find("images: T1, T2"), std::string::npos);
  EXPECT_NE(a.find("sha256="), std::string::npos);
}

// ---------------------------------------------------------------------------

class RegionRead : public ::testing::Test {
 protected:
  void SetUp() override {
    plan_ = testing::write_subjects(dir_.path(), 2, Shape{13, 10, 9});
    create_dataset(plan_, dir_ / "ds.mia");
  }
  TempDir dir_;
  CreationPlan plan_;
};

TEST_F(RegionRead, AxisZeroSliceIsOneRead) {
  const Dataset ds = Dataset::open(dir_ / "ds.mia");
  const Tensor full = ds.read_region("Subject_1", "images");
  ds.reset_io_stats();
  const Tensor slice = ds.read_region("Subject_1", "images", {{6, 0, 0}, {1, 10, 9}});
  EXPECT_EQ(ds.io_stats().read_calls, 1u);
  EXPECT_EQ(ds.io_stats().bytes_read, 10u * 9 * 2 * 4);
  EXPECT_EQ(slice.shape(), (Shape{1, 10, 9, 2}));
  const std::vector<std::int64_t> start{6, 0, 0};
  const std::vector<std::size_t> size{1, 10, 9};
  EXPECT_EQ(slice, extract_subtensor(full, start, size));
}

TEST_F(RegionRead, PatchReadCountBounded) {
  const Dataset ds = Dataset::open(dir_ / "ds.mia");
  ds.reset_io_stats();
  ds.read_region("Subject_2", "labels", {{1, 2, 3}, {4, 5, 6}});
  EXPECT_LE(ds.io_stats().read_calls, 4u * 5);
  ds.reset_io_stats();
  ds.read_region("Subject_2", "labels", {{1, 0, 0}, {4, 10, 9}});
  EXPECT_EQ(ds.io_stats().read_calls, 1u);
  ds.reset_io_stats();
  ds.read_region("Subject_2", "labels", {{1, 2, 0}, {4, 5, 9}});
  EXPECT_EQ(ds.io_stats().read_calls, 4u);
}

TEST_F(RegionRead, RandomRegionsMatchInMemoryCrop) {
  const Dataset ds = Dataset::open(dir_ / "ds.mia");
  std::mt19937_64 rng(2024);
  for (const auto& s : ds.subjects()) {
    for (const char* cat : {"images", "labels", "mask"}) {
      const Tensor full = ds.read_region(s, cat);
      for (int k = 0; k < 170; ++k) {
        std::vector<std::int64_t> start;
        std::vector<std::size_t> size;
        for (std::size_t ax = 0; ax < 3; ++ax) {
          const std::size_t ext = full.shape()[ax];
          const std::size_t lo = std::uniform_int_distribution<std::size_t>(0, ext - 1)(rng);
          start.push_back(static_cast<std::int64_t>(lo));
          size.push_back(std::uniform_int_distribution<std::size_t>(1, ext - lo)(rng));
        }
        ASSERT_EQ(ds.read_region(s, cat, {start, size}), extract_subtensor(full, start, size));
      }
    }
  }
}

TEST_F(RegionRead, Errors) {
  const Dataset ds = Dataset::open(dir_ / "ds.mia");
  EXPECT_THROW(ds.read_region("Subject_9", "images"), LookupError);
  EXPECT_THROW(ds.read_region("Subject_1", "flair"), LookupError);
  EXPECT_THROW(ds.read_region("Subject_1", "images", {{12, 0, 0}, {2, 10, 9}}), RangeError);
  EXPECT_THROW(ds.read_region("Subject_1", "images", {{-1, 0, 0}, {1, 10, 9}}), RangeError);
  EXPECT_THROW(ds.read_region("Subject_1", "images", {{0, 0}, {1, 10}}), RangeError);
  EXPECT_THROW(ds.read_region("Subject_1", "images", {{0, 0, 0}, {0, 10, 9}}), RangeError);
}

TEST_F(RegionRead, ConcurrentReadersAgree) {
  const Dataset ds = Dataset::open(dir_ / "ds.mia");
  const Tensor full = ds.read_region("Subject_1", "images");
  std::vector<std::thread> workers;
  std::atomic<int> mismatches{0};
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&, w] {
      for (std::int64_t z = w; z < 13; z += 4) {
        const std::vector<std::int64_t> start{z, 0, 0};
        const std::vector<std::size_t> size{1, 10, 9};
        if (!(ds.read_region("Subject_1", "images", {start, size}) == extract_subtensor(full, start, size))) {
          ++mismatches;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  EXPECT_EQ(mismatches.load(), 0);
}

}  // namespace
}  // namespace mia
