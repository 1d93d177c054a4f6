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

#include <filesystem>
#include <string>

#include "mia/dataset.hpp"

namespace mia::cli {

/// Reads a creation config:
///
///   [dataset]
///   name = "example"
///   hash = true                 # optional
///   [dataset.names]
///   images = ["T1", "T2"]
///   [dataset.dtypes]
///   labels = "uint8"
///   [[subject]]
///   id = "Subject_1"
///   [subject.files]              # one path or a list of channel paths
///   images = ["s1/T1.mha", "s1/T2.mha"]
///   labels = "s1/GT.mha"
///   [subject.values]             # inline non-image data
///   numerical = [25.0, 3.7]
///   gender = { dtype = "uint8", values = [1] }
///   [[transforms]]
///   kind = "znormalize"          # or "rescale" (out_min, out_max), "custom" (name)
///   categories = ["images"]
///
/// Relative paths resolve against the config file's directory. Categories
/// keep the order in which they first appear in the file. Throws ConfigError.
CreationPlan load_creation_plan(const std::filesystem::path& config_path, std::string* dataset_name = nullptr);

}  // namespace mia::cli
