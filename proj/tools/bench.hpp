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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mia/tensor.hpp"

namespace mia::cli {

// Loading benchmark: the same synthetic two-channel subjects stored as a
// container, as .npy files, as MetaImages and as compressed MetaImages, read
// per sample with whole-image, patch and slice indexing.

inline const std::vector<std::string> kBenchVariants{"container", "npy", "metaimage", "metaimage-compressed"};
inline const std::vector<std::string> kBenchStrategies{"full", "patch", "slice"};

struct BenchConfig {
  std::size_t subjects = 25;
  Shape shape{181, 217, 181};
  std::vector<std::string> variants = kBenchVariants;
  std::vector<std::string> strategies = kBenchStrategies;
  std::size_t runs = 5;
  std::size_t patch = 84;
  /// Samples timed per pass, a seeded subset shared by every variant; 0
  /// times every sample.
  std::size_t max_samples = 40;
  std::uint64_t seed = 42;
  std::filesystem::path workdir;  // empty: a fresh directory under the temp dir
  bool keep = false;
};

struct BenchRow {
  std::string variant;
  std::string strategy;
  double mean_ms = 0;  // mean over passes of the per-sample mean
  double std_ms = 0;   // population std of the per-pass means
  std::size_t samples = 0;
};

/// Throws IoError when the work directory lacks space for the fixtures.
std::vector<BenchRow> run_bench(const BenchConfig& config, std::ostream& log);

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out, char delimiter = ';');
std::string bench_bars(const std::vector<BenchRow>& rows);

}  // namespace mia::cli
