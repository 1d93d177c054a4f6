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

#include <cstdio>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "mia/tensor.hpp"

namespace mia::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "mia") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Tensor random_tensor(DType dtype, Shape shape, std::mt19937_64& rng) {
  Tensor t(dtype, std::move(shape));
  t.visit([&](auto values) {
    using T = typename decltype(values)::value_type;
    if constexpr (std::is_floating_point_v<T>) {
      std::uniform_real_distribution<T> dist(-10, 10);
      for (auto& v : values) v = dist(rng);
    } else {
      std::uniform_int_distribution<int> dist(0, 200);
      for (auto& v : values) v = static_cast<T>(dist(rng));
    }
  });
  return t;
}

inline Tensor ramp(Shape shape) {
  Tensor t(DType::kFloat64, std::move(shape));
  auto v = t.values<double>();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  return t;
}

// Digest from the coreutils tool; empty when it is unavailable.
inline std::string sha256sum(const std::filesystem::path& p) {
  const std::string cmd = "sha256sum '" + p.string() + "'";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) return {};
  char buf[65] = {};
  if (std::fread(buf, 1, 64, pipe.get()) != 64) return {};
  return std::string(buf, 64);
}

}  // namespace mia::testing
