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

#include "mia/tensor.hpp"

namespace mia {

// Intensity operations shared by write-time (dataset creation) and
// read-time (sample) transforms. Integer inputs produce float32 output;
// floating inputs keep their dtype.

/// Zero mean, unit standard deviation (population) per channel. When
/// `has_channels` is set the last axis indexes channels; otherwise the whole
/// tensor is one channel. Channels with zero deviation are only centred.
Tensor znormalize(const Tensor& t, bool has_channels);

/// Linear map of [min, max] onto [out_min, out_max] over all elements. A
/// constant tensor maps to out_min.
Tensor rescale_intensity(const Tensor& t, double out_min, double out_max);

}  // namespace mia
