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

#include "bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "mia/access.hpp"
#include "mia/dataset.hpp"
#include "mia/error.hpp"
#include "mia/evaluation.hpp"
#include "mia/imageio.hpp"

namespace mia::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

std::string subject_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "Subject_%03zu", i + 1);
  return buf;
}

// Integer-valued intensities so the compressed variant compresses somewhat,
// as MR images do.
Tensor synthetic_channel(const Shape& shape, std::uint64_t seed) {
  Tensor t(DType::kFloat32, shape);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 1023);
  for (auto& v : t.values<float>()) v = static_cast<float>(d(rng));
  return t;
}

std::string file_ext(const std::string& variant) { return variant == "npy" ? ".npy" : ".mha"; }

fs::path variant_dir(const fs::path& root, const std::string& variant) { return root / variant; }

IndexingStrategy strategy_for(const std::string& name, const BenchConfig& c) {
  if (name == "full") return IndexingStrategy::empty();
  if (name == "slice") return IndexingStrategy::slice(0);
  if (name == "patch") return IndexingStrategy::patch(Shape(c.shape.size(), c.patch));
  throw ArgumentError("unknown bench strategy '" + name + "' (full, patch, slice)");
}

struct Moments {
  double mean = 0, std = 0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(s / static_cast<double>(v.size()));
  return m;
}

void generate(const BenchConfig& c, const fs::path& root, std::ostream& log) {
  const bool want_container = std::count(c.variants.begin(), c.variants.end(), "container") > 0;
  std::vector<std::string> file_variants;
  for (const auto& v : c.variants) {
    if (v != "container") file_variants.push_back(v);
  }
  // the container is built from uncompressed MetaImages
  const bool need_mha = want_container || std::count(c.variants.begin(), c.variants.end(), "metaimage");
  if (need_mha && std::find(file_variants.begin(), file_variants.end(), "metaimage") == file_variants.end()) {
    file_variants.push_back("metaimage");
  }
  const auto geometry = ImageGeometry::identity(c.shape.size());
  std::map<std::string, CreationPlan> plans;
  for (std::size_t s = 0; s < c.subjects; ++s) {
    const std::string id = subject_name(s);
    for (const auto& v : file_variants) plans[v].subjects.push_back({id, {{"images", FileList{}}}});
    for (int ch = 0; ch < 2; ++ch) {
      const Tensor t = synthetic_channel(c.shape, c.seed * 1000003u + s * 2 + static_cast<unsigned>(ch));
      const std::string stem = id + (ch == 0 ? "_T1" : "_T2");
      for (const auto& v : file_variants) {
        const fs::path dir = variant_dir(root, v);
        fs::create_directories(dir);
        const fs::path p = dir / (stem + file_ext(v));
        if (v == "npy") {
          write_npy(t, p);
        } else {
          write_metaimage(t, geometry, p, v == "metaimage-compressed");
        }
        std::get<FileList>(plans[v].subjects.back().categories[0].second).push_back(p);
      }
    }
    log << "bench: generated " << id << '\n' << std::flush;
  }
  for (auto& [v, plan] : plans) {
    plan.names["images"] = {"T1", "T2"};
    create_metadata_dataset(plan, root / (v + ".meta.mia"));
  }
  if (want_container) {
    create_dataset(plans.at("metaimage"), root / "container.mia");
    log << "bench: container written\n" << std::flush;
  }
}

// Removes the generated fixtures on exit. A directory the bench created is
// removed whole; in a pre-existing one only the generated entries go.
struct WorkDir {
  fs::path path;
  bool remove = false;
  bool created = false;
  ~WorkDir() {
    if (!remove) return;
    std::error_code ec;
    if (created) {
      fs::remove_all(path, ec);
      return;
    }
    for (const auto& v : kBenchVariants) {
      fs::remove_all(path / v, ec);
      fs::remove(path / (v + ".meta.mia"), ec);
    }
    fs::remove(path / "container.mia", ec);
  }
};

}  // namespace

std::vector<BenchRow> run_bench(const BenchConfig& c, std::ostream& log) {
  if (c.subjects == 0 || c.runs == 0) throw ArgumentError("bench needs at least one subject and one run");
  if (c.shape.size() != 3) throw ArgumentError("bench shape must have three extents");
  for (const auto& v : c.variants) {
    if (std::find(kBenchVariants.begin(), kBenchVariants.end(), v) == kBenchVariants.end()) {
      throw ArgumentError("unknown bench variant '" + v + "' (container, npy, metaimage, metaimage-compressed)");
    }
  }
  for (const auto& s : c.strategies) strategy_for(s, c);
  if (c.patch == 0 || std::any_of(c.shape.begin(), c.shape.end(), [&](std::size_t e) { return e < c.patch; })) {
    throw ArgumentError("patch size must be positive and fit the image shape");
  }

  WorkDir work;
  if (c.workdir.empty()) {
    std::random_device rd;
    work.path = fs::temp_directory_path() / ("mia-bench-" + std::to_string(rd()));
  } else {
    work.path = c.workdir;
  }
  work.created = fs::create_directories(work.path);
  work.remove = !c.keep;

  // every variant holds one copy of the payload; the container also needs
  // its uncompressed MetaImage sources
  const std::uint64_t per_copy = c.subjects * 2 * element_count(c.shape) * 4;
  std::uint64_t copies = c.variants.size();
  if (std::count(c.variants.begin(), c.variants.end(), "container") &&
      !std::count(c.variants.begin(), c.variants.end(), "metaimage")) {
    ++copies;
  }
  const auto space = fs::space(work.path);
  if (space.available < per_copy * copies + per_copy / 10) {
    throw IoError("insufficient disk space in " + work.path.string() + ": need about " +
                  std::to_string((per_copy * copies) >> 20) + " MiB, have " +
                  std::to_string(space.available >> 20) + " MiB");
  }

  generate(c, work.path, log);

  std::vector<BenchRow> rows;
  for (const auto& variant : c.variants) {
    for (const auto& sname : c.strategies) {
      DatasourceConfig dc;
      dc.strategy = strategy_for(sname, c);
      dc.extractors = {ExtractorSpec::data("images")};
      const Datasource ds = variant == "container"
                                ? Datasource::from_container(work.path / "container.mia", dc)
                                : Datasource::from_filesystem(work.path / (variant + ".meta.mia"), dc);
      std::vector<std::size_t> indices(ds.size());
      std::iota(indices.begin(), indices.end(), 0);
      if (c.max_samples && indices.size() > c.max_samples) {
        // same subset for every variant: the seed depends only on the strategy
        std::mt19937_64 rng(c.seed ^ std::hash<std::string>{}(sname));
        std::shuffle(indices.begin(), indices.end(), rng);
        indices.resize(c.max_samples);
        std::sort(indices.begin(), indices.end());
      }
      // warm pass, untimed
      std::size_t sink = 0;
      for (auto i : indices) sink += ds.get_sample(i).tensor("images").size();
      std::vector<double> pass_means;
      for (std::size_t run = 0; run < c.runs; ++run) {
        double total = 0;
        for (auto i : indices) {
          const auto t0 = Clock::now();
          const Sample s = ds.get_sample(i);
          const auto t1 = Clock::now();
          sink += s.tensor("images").size();
          total += std::chrono::duration<double, std::milli>(t1 - t0).count();
        }
        pass_means.push_back(total / static_cast<double>(indices.size()));
      }
      const Moments m = moments(pass_means);
      rows.push_back({variant, sname, m.mean, m.std, indices.size()});
      log << "bench: " << variant << " / " << sname << ": " << format_value(m.mean) << " ms per sample ("
          << indices.size() << " samples, " << c.runs << " runs" << (sink ? "" : ", empty") << ")\n"
          << std::flush;
    }
  }
  return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out, char d) {
  out << "VARIANT" << d << "STRATEGY" << d << "MEAN_MS" << d << "STD_MS\n";
  for (const auto& r : rows) {
    out << r.variant << d << r.strategy << d << format_value(r.mean_ms) << d << format_value(r.std_ms) << '\n';
  }
}

std::string bench_bars(const std::vector<BenchRow>& rows) {
  // log-scaled bars, since the variants differ by orders of magnitude
  double lo = 1e300, hi = 0;
  for (const auto& r : rows) {
    if (r.mean_ms > 0) {
      lo = std::min(lo, r.mean_ms);
      hi = std::max(hi, r.mean_ms);
    }
  }
  std::ostringstream os;
  std::size_t label_width = 0;
  for (const auto& r : rows) label_width = std::max(label_width, r.variant.size() + r.strategy.size() + 3);
  const double span = hi > lo ? std::log10(hi / lo) : 1.0;
  for (const auto& r : rows) {
    const std::string label = r.strategy + " / " + r.variant;
    const double frac = r.mean_ms > 0 ? std::log10(r.mean_ms / lo) / span : 0.0;
    const auto len = static_cast<std::size_t>(std::lround(1 + 49 * frac));
    os << label << std::string(label_width - label.size() + 1, ' ') << std::string(len, '#') << ' '
       << format_value(std::round(r.mean_ms * 1000) / 1000) << " ms\n";
  }
  return os.str();
}

}  // namespace mia::cli
