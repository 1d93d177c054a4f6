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
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mia/geometry.hpp"
#include "mia/tensor.hpp"

namespace mia {

struct EvaluationResult {
  std::string subject_id;
  std::string label_name;
  std::string metric;  // column name, e.g. DICE, HDRFDST95, AREA_REF
  double value = 0;

  friend bool operator==(const EvaluationResult&, const EvaluationResult&) = default;
};

/// A requested metric and its parameters. Some metrics report more than one
/// column (AREA, VOL and SURFOVLP give _REF and _PRED values).
struct MetricSpec {
  std::string abbreviation;
  double beta = 1.0;            // FMEASR
  double percentile = 100.0;    // HDRFDST
  double tolerance_mm = 1.0;    // SURFOVLP, SURFDICE
  std::optional<std::size_t> slice_index;  // AREA
  std::optional<double> data_range;        // PSNR, SSIM

  /// Parses an abbreviation. "HDRFDST95" sets the percentile; other
  /// parameters come from `defaults`. Throws ArgumentError for unknown names.
  static MetricSpec parse(const std::string& token, const MetricSpec& defaults);
  static MetricSpec parse(const std::string& token);

  std::vector<std::string> columns() const;
  bool is_continuous() const;
};

std::vector<MetricSpec> parse_metric_list(const std::string& comma_separated, const MetricSpec& defaults = {});

/// Every accepted abbreviation, segmentation metrics first.
const std::vector<std::string>& metric_abbreviations();

/// Label value to display name, in reporting order.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::pair<std::int64_t, std::string>> entries);

  /// Lines "int<TAB>name"; blank lines and '#' comments are skipped.
  static LabelMap read(const std::filesystem::path& path);

  void add(std::int64_t label, std::string name);
  const std::vector<std::pair<std::int64_t, std::string>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<std::pair<std::int64_t, std::string>> entries_;
};

struct LabeledImage {
  Tensor tensor;
  ImageGeometry geometry;
};

/// Rows ordered by label (LabelMap order) then metric column (request
/// order). Confusion counts and surface distances are computed once per
/// label. Throws EvaluationError when the spacings differ by more than 1e-6.
std::vector<EvaluationResult> evaluate_segmentation(const LabeledImage& reference, const LabeledImage& prediction,
                                                    const LabelMap& labels, const std::vector<MetricSpec>& metrics,
                                                    const std::string& subject_id);

/// One row per metric column, label "-".
std::vector<EvaluationResult> evaluate_continuous(const Tensor& reference, const Tensor& prediction,
                                                  const std::vector<MetricSpec>& metrics,
                                                  const std::string& subject_id);

// ---------------------------------------------------------------------------
// Writers

/// Shortest round-trip decimal; "NaN", "inf" and "-inf" for the specials.
std::string format_value(double value);
double parse_value(const std::string& text);

/// Wide table SUBJECT;LABEL;<metric>... with one line per (subject, label)
/// in order of first appearance. Throws EvaluationError for empty input or
/// when the metric columns differ between rows.
void write_csv(const std::vector<EvaluationResult>& results, std::ostream& out, char delimiter = ';');
void write_csv(const std::vector<EvaluationResult>& results, const std::filesystem::path& path,
               char delimiter = ';');
std::vector<EvaluationResult> read_csv(std::istream& in, char delimiter = ';');
std::vector<EvaluationResult> read_csv(const std::filesystem::path& path, char delimiter = ';');

std::string write_console(const std::vector<EvaluationResult>& results);

// ---------------------------------------------------------------------------
// Statistics

using Reducer = std::function<double(const std::vector<double>&)>;

struct NamedReducer {
  std::string name;
  Reducer fn;
};

/// MEAN, STD (population), MEDIAN, MIN, MAX, P25, P75.
NamedReducer builtin_reducer(const std::string& name);
std::vector<NamedReducer> parse_reducer_list(const std::string& comma_separated);

struct StatisticRow {
  std::string label;
  std::string metric;
  std::string statistic;
  double value = 0;
  std::size_t excluded = 0;  // NaN inputs left out of the reduction

  friend bool operator==(const StatisticRow&, const StatisticRow&) = default;
};

/// One row per (label, metric, reducer) over all subjects, labels and
/// metrics in order of first appearance. A reduction with no values left
/// gives NaN and a warning.
std::vector<StatisticRow> aggregate(const std::vector<EvaluationResult>& results,
                                    const std::vector<NamedReducer>& reducers);

void write_statistics_csv(const std::vector<StatisticRow>& rows, std::ostream& out, char delimiter = ';');
void write_statistics_csv(const std::vector<StatisticRow>& rows, const std::filesystem::path& path,
                          char delimiter = ';');
std::string write_statistics_console(const std::vector<StatisticRow>& rows);

}  // namespace mia
