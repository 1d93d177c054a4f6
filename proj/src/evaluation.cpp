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

#include "mia/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "mia/diagnostics.hpp"
#include "mia/error.hpp"
#include "mia/metrics/confusion.hpp"
#include "mia/metrics/continuous.hpp"
#include "mia/metrics/distance.hpp"

namespace mia {

namespace {

const std::vector<std::string> kSegmentation{
    "DICE",   "JACRD",  "SNSVTY",  "SPCFTY", "FALLOUT", "FNR",  "ACURCY",  "PRCISON", "FMEASR",
    "VOLSMTY", "RNDIND", "ADJRIND", "MUTINF", "VARINFO", "GCOERR", "KAPPA", "AUC",     "ICCORR",
    "PROBDST", "AREA",   "VOL",     "HDRFDST", "AVGDIST", "MAHLNBS", "SURFOVLP", "SURFDICE"};
const std::vector<std::string> kContinuous{"R2", "MAE", "MSE", "RMSE", "NRMSE", "PSNR", "SSIM"};

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char d) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == d) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string join_valid() {
  std::string s;
  for (const auto& v : metric_abbreviations()) s += (s.empty() ? "" : ", ") + v;
  return s;
}

void check_spacing(const ImageGeometry& a, const ImageGeometry& b) {
  bool same = a.spacing.size() == b.spacing.size();
  for (std::size_t i = 0; same && i < a.spacing.size(); ++i) same = std::abs(a.spacing[i] - b.spacing[i]) <= 1e-6;
  if (!same) throw EvaluationError("reference and prediction spacings differ; distances would be ambiguous");
}

}  // namespace

// ---------------------------------------------------------------------------
// Metric specs

MetricSpec MetricSpec::parse(const std::string& token, const MetricSpec& defaults) {
  MetricSpec m = defaults;
  std::string name = upper(trim(token));
  if (name.rfind("HDRFDST", 0) == 0 && name.size() > 7) {
    const std::string suffix = name.substr(7);
    double p = 0;
    const auto [ptr, ec] = std::from_chars(suffix.data(), suffix.data() + suffix.size(), p);
    if (ec != std::errc() || ptr != suffix.data() + suffix.size()) {
      throw ArgumentError("unknown metric '" + token + "'; valid: " + join_valid());
    }
    m.percentile = p;
    name = "HDRFDST";
  }
  if (!contains(kSegmentation, name) && !contains(kContinuous, name)) {
    throw ArgumentError("unknown metric '" + token + "'; valid: " + join_valid());
  }
  m.abbreviation = name;
  if (name == "HDRFDST" && !(m.percentile > 0.0 && m.percentile <= 100.0)) {
    throw ArgumentError("HDRFDST percentile must lie in (0, 100]");
  }
  if ((name == "SURFOVLP" || name == "SURFDICE") && !(m.tolerance_mm >= 0.0)) {
    throw ArgumentError("surface tolerance must be >= 0");
  }
  if (name == "FMEASR" && !(m.beta > 0.0)) throw ArgumentError("FMEASR beta must be positive");
  return m;
}

MetricSpec MetricSpec::parse(const std::string& token) { return parse(token, MetricSpec{}); }

std::vector<std::string> MetricSpec::columns() const {
  if (abbreviation == "AREA" || abbreviation == "VOL" || abbreviation == "SURFOVLP") {
    return {abbreviation + "_REF", abbreviation + "_PRED"};
  }
  if (abbreviation == "HDRFDST" && percentile != 100.0) return {"HDRFDST" + format_value(percentile)};
  return {abbreviation};
}

bool MetricSpec::is_continuous() const { return contains(kContinuous, abbreviation); }

std::vector<MetricSpec> parse_metric_list(const std::string& comma_separated, const MetricSpec& defaults) {
  std::vector<MetricSpec> out;
  for (const auto& t : split(comma_separated, ',')) {
    if (trim(t).empty()) continue;
    out.push_back(MetricSpec::parse(t, defaults));
  }
  if (out.empty()) throw ArgumentError("no metrics requested");
  return out;
}

const std::vector<std::string>& metric_abbreviations() {
  static const std::vector<std::string> all = [] {
    auto v = kSegmentation;
    v.insert(v.end(), kContinuous.begin(), kContinuous.end());
    return v;
  }();
  return all;
}

// ---------------------------------------------------------------------------
// Labels

LabelMap::LabelMap(std::vector<std::pair<std::int64_t, std::string>> entries) {
  for (auto& [k, v] : entries) add(k, std::move(v));
}

void LabelMap::add(std::int64_t label, std::string name) {
  if (name.empty()) throw ArgumentError("label " + std::to_string(label) + " has an empty name");
  for (const auto& [k, v] : entries_) {
    if (k == label) throw ArgumentError("label " + std::to_string(label) + " listed twice");
    if (v == name) throw ArgumentError("label name '" + name + "' used twice");
  }
  entries_.emplace_back(label, std::move(name));
}

LabelMap LabelMap::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open labels file " + path.string());
  LabelMap map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto tab = t.find('\t');
    if (tab == std::string::npos) {
      throw ArgumentError(path.string() + ":" + std::to_string(lineno) + ": expected \"<int>\\t<name>\"");
    }
    const std::string num = trim(t.substr(0, tab));
    std::int64_t label = 0;
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), label);
    if (ec != std::errc() || ptr != num.data() + num.size()) {
      throw ArgumentError(path.string() + ":" + std::to_string(lineno) + ": bad label value '" + num + "'");
    }
    map.add(label, trim(t.substr(tab + 1)));
  }
  if (map.size() == 0) throw ArgumentError("labels file " + path.string() + " lists no labels");
  return map;
}

// ---------------------------------------------------------------------------
// Evaluation

std::vector<EvaluationResult> evaluate_segmentation(const LabeledImage& reference, const LabeledImage& prediction,
                                                    const LabelMap& labels, const std::vector<MetricSpec>& metrics,
                                                    const std::string& subject_id) {
  if (reference.tensor.shape() != prediction.tensor.shape()) {
    throw ArgumentError("subject " + subject_id + ": reference shape " +
                        shape_to_string(reference.tensor.shape()) + " differs from prediction shape " +
                        shape_to_string(prediction.tensor.shape()));
  }
  check_spacing(reference.geometry, prediction.geometry);
  for (const auto& m : metrics) {
    if (m.is_continuous()) throw ArgumentError(m.abbreviation + " is not a segmentation metric");
  }
  const auto& spacing = reference.geometry.spacing;
  if (spacing.size() != reference.tensor.rank()) {
    throw ArgumentError("subject " + subject_id + ": geometry rank does not match the image");
  }

  std::vector<EvaluationResult> out;
  for (const auto& [label, name] : labels.entries()) {
    const Tensor r = binarize(reference.tensor, label);
    const Tensor p = binarize(prediction.tensor, label);
    const ConfusionMatrix cm = confusion(r, p);
    std::optional<SurfaceDistances> sd;
    auto distances = [&]() -> const SurfaceDistances& {
      if (!sd) sd = surface_distances(r, p, spacing);
      return *sd;
    };
    auto emit = [&](const std::string& column, double v) { out.push_back({subject_id, name, column, v}); };

    for (const auto& m : metrics) {
      const std::string& a = m.abbreviation;
      const auto cols = m.columns();
      if (a == "DICE") emit(cols[0], dice(cm));
      else if (a == "JACRD") emit(cols[0], jaccard(cm));
      else if (a == "SNSVTY") emit(cols[0], sensitivity(cm));
      else if (a == "SPCFTY") emit(cols[0], specificity(cm));
      else if (a == "FALLOUT") emit(cols[0], fallout(cm));
      else if (a == "FNR") emit(cols[0], false_negative_rate(cm));
      else if (a == "ACURCY") emit(cols[0], accuracy(cm));
      else if (a == "PRCISON") emit(cols[0], precision(cm));
      else if (a == "FMEASR") emit(cols[0], f_measure(cm, m.beta));
      else if (a == "VOLSMTY") emit(cols[0], volume_similarity(cm));
      else if (a == "RNDIND") emit(cols[0], rand_index(cm));
      else if (a == "ADJRIND") emit(cols[0], adjusted_rand_index(cm));
      else if (a == "MUTINF") emit(cols[0], mutual_information(cm));
      else if (a == "VARINFO") emit(cols[0], variation_of_information(cm));
      else if (a == "GCOERR") emit(cols[0], global_consistency_error(cm));
      else if (a == "KAPPA") emit(cols[0], kappa(cm));
      else if (a == "AUC") emit(cols[0], auc(cm));
      else if (a == "ICCORR") emit(cols[0], interclass_correlation(cm));
      else if (a == "PROBDST") emit(cols[0], probabilistic_distance(cm));
      else if (a == "AREA") {
        emit(cols[0], area(r, reference.geometry, m.slice_index));
        emit(cols[1], area(p, reference.geometry, m.slice_index));
      } else if (a == "VOL") {
        emit(cols[0], volume(r, reference.geometry));
        emit(cols[1], volume(p, reference.geometry));
      } else if (a == "HDRFDST") emit(cols[0], hausdorff(distances(), m.percentile));
      else if (a == "AVGDIST") emit(cols[0], average_distance(distances()));
      else if (a == "MAHLNBS") emit(cols[0], mahalanobis(r, p, spacing));
      else if (a == "SURFOVLP") {
        const auto s = surface_overlap(distances(), m.tolerance_mm);
        emit(cols[0], s.ref);
        emit(cols[1], s.pred);
      } else if (a == "SURFDICE") emit(cols[0], surface_overlap(distances(), m.tolerance_mm).dice);
      else throw ArgumentError("unknown metric '" + a + "'");
    }
  }
  return out;
}

std::vector<EvaluationResult> evaluate_continuous(const Tensor& reference, const Tensor& prediction,
                                                  const std::vector<MetricSpec>& metrics,
                                                  const std::string& subject_id) {
  if (reference.shape() != prediction.shape()) {
    throw ArgumentError("subject " + subject_id + ": reference shape " + shape_to_string(reference.shape()) +
                        " differs from prediction shape " + shape_to_string(prediction.shape()));
  }
  std::optional<ErrorMetrics> em;
  auto errors = [&]() -> const ErrorMetrics& {
    if (!em) em = error_metrics(reference, prediction);
    return *em;
  };
  std::vector<EvaluationResult> out;
  for (const auto& m : metrics) {
    const std::string& a = m.abbreviation;
    double v = 0;
    if (a == "MAE") v = errors().mae;
    else if (a == "MSE") v = errors().mse;
    else if (a == "RMSE") v = errors().rmse;
    else if (a == "NRMSE") v = errors().nrmse;
    else if (a == "R2") v = errors().r2;
    else if (a == "PSNR") v = psnr(reference, prediction, m.data_range);
    else if (a == "SSIM") {
      SsimOptions o;
      o.data_range = m.data_range;
      v = ssim(reference, prediction, o);
    } else {
      throw ArgumentError(a + " is not a continuous metric");
    }
    out.push_back({subject_id, "-", m.columns()[0], v});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Number formatting

std::string format_value(double value) {
  if (std::isnan(value)) return "NaN";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, ptr);
}

double parse_value(const std::string& text) {
  const std::string t = trim(text);
  if (t == "NaN" || t == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (t == "inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ArgumentError("not a number: '" + text + "'");
  }
  return v;
}

// ---------------------------------------------------------------------------
// Result tables

namespace {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::pair<std::string, std::string>> keys;  // (subject, label)
  std::vector<std::vector<double>> values;
};

Table pivot(const std::vector<EvaluationResult>& results) {
  if (results.empty()) throw EvaluationError("no evaluation results to write");
  Table t;
  std::map<std::pair<std::string, std::string>, std::size_t> row_of;
  std::vector<std::vector<std::string>> row_columns;
  for (const auto& r : results) {
    const auto key = std::make_pair(r.subject_id, r.label_name);
    auto it = row_of.find(key);
    if (it == row_of.end()) {
      it = row_of.emplace(key, t.keys.size()).first;
      t.keys.push_back(key);
      t.values.emplace_back();
      row_columns.emplace_back();
    }
    row_columns[it->second].push_back(r.metric);
    t.values[it->second].push_back(r.value);
  }
  t.columns = row_columns.front();
  for (std::size_t i = 0; i < row_columns.size(); ++i) {
    if (row_columns[i] != t.columns) {
      throw EvaluationError("row " + t.keys[i].first + "/" + t.keys[i].second +
                            " has a different metric set; every row needs the same columns");
    }
  }
  return t;
}

std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                         std::size_t text_columns) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string pad(width[c] - cells[c].size(), ' ');
      if (c) os << "  ";
      if (c < text_columns) {
        os << cells[c] << (c + 1 < cells.size() ? pad : "");
      } else {
        os << pad << cells[c];
      }
    }
    os << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return os.str();
}

}  // namespace

void write_csv(const std::vector<EvaluationResult>& results, std::ostream& out, char delimiter) {
  const Table t = pivot(results);
  out << "SUBJECT" << delimiter << "LABEL";
  for (const auto& c : t.columns) out << delimiter << c;
  out << '\n';
  for (std::size_t i = 0; i < t.keys.size(); ++i) {
    out << t.keys[i].first << delimiter << t.keys[i].second;
    for (double v : t.values[i]) out << delimiter << format_value(v);
    out << '\n';
  }
}

void write_csv(const std::vector<EvaluationResult>& results, const std::filesystem::path& path, char delimiter) {
  std::ostringstream os;
  write_csv(results, os, delimiter);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << os.str();
  if (!f) throw IoError("failed writing " + path.string());
}

std::vector<EvaluationResult> read_csv(std::istream& in, char delimiter) {
  std::string line;
  if (!std::getline(in, line)) throw EvaluationError("empty results file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, delimiter);
  if (header.size() < 3 || header[0] != "SUBJECT" || header[1] != "LABEL") {
    throw EvaluationError("results header must start with SUBJECT" + std::string(1, delimiter) + "LABEL");
  }
  std::vector<EvaluationResult> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, delimiter);
    if (cells.size() != header.size()) {
      throw EvaluationError("line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                            " fields, header has " + std::to_string(header.size()));
    }
    for (std::size_t c = 2; c < cells.size(); ++c) {
      double v = 0;
      try {
        v = parse_value(cells[c]);
      } catch (const ArgumentError& e) {
        throw EvaluationError("line " + std::to_string(lineno) + ": " + e.what());
      }
      out.push_back({cells[0], cells[1], header[c], v});
    }
  }
  return out;
}

std::vector<EvaluationResult> read_csv(const std::filesystem::path& path, char delimiter) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  return read_csv(f, delimiter);
}

std::string write_console(const std::vector<EvaluationResult>& results) {
  const Table t = pivot(results);
  std::vector<std::string> header{"SUBJECT", "LABEL"};
  header.insert(header.end(), t.columns.begin(), t.columns.end());
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < t.keys.size(); ++i) {
    std::vector<std::string> r{t.keys[i].first, t.keys[i].second};
    for (double v : t.values[i]) r.push_back(format_value(v));
    rows.push_back(std::move(r));
  }
  return render_table(header, rows, 2);
}

// ---------------------------------------------------------------------------
// Statistics

NamedReducer builtin_reducer(const std::string& raw) {
  const std::string name = upper(trim(raw));
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  if (name == "MEAN") return {name, mean};
  if (name == "STD") {
    return {name, [mean](const std::vector<double>& v) {
              const double m = mean(v);
              double s = 0;
              for (double x : v) s += (x - m) * (x - m);
              return std::sqrt(s / static_cast<double>(v.size()));
            }};
  }
  if (name == "MEDIAN") return {name, [](const std::vector<double>& v) { return percentile(v, 50); }};
  if (name == "MIN") return {name, [](const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }};
  if (name == "MAX") return {name, [](const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }};
  if (name == "P25") return {name, [](const std::vector<double>& v) { return percentile(v, 25); }};
  if (name == "P75") return {name, [](const std::vector<double>& v) { return percentile(v, 75); }};
  throw ArgumentError("unknown statistic '" + raw + "'; valid: MEAN, STD, MEDIAN, MIN, MAX, P25, P75");
}

std::vector<NamedReducer> parse_reducer_list(const std::string& comma_separated) {
  std::vector<NamedReducer> out;
  for (const auto& t : split(comma_separated, ',')) {
    if (!trim(t).empty()) out.push_back(builtin_reducer(t));
  }
  if (out.empty()) throw ArgumentError("no statistics requested");
  return out;
}

std::vector<StatisticRow> aggregate(const std::vector<EvaluationResult>& results,
                                    const std::vector<NamedReducer>& reducers) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::pair<std::vector<double>, std::size_t>> groups;
  for (const auto& r : results) {
    const auto key = std::make_pair(r.label_name, r.metric);
    auto it = groups.find(key);
    if (it == groups.end()) {
      it = groups.emplace(key, std::make_pair(std::vector<double>{}, std::size_t{0})).first;
      order.push_back(key);
    }
    if (std::isnan(r.value)) {
      ++it->second.second;
    } else {
      it->second.first.push_back(r.value);
    }
  }
  std::vector<StatisticRow> out;
  for (const auto& key : order) {
    const auto& [values, excluded] = groups.at(key);
    for (const auto& red : reducers) {
      double v = std::numeric_limits<double>::quiet_NaN();
      if (values.empty()) {
        warn(red.name + " of " + key.second + " for label " + key.first + ": no values left, reporting NaN");
      } else {
        v = red.fn(values);
      }
      out.push_back({key.first, key.second, red.name, v, excluded});
    }
  }
  return out;
}

void write_statistics_csv(const std::vector<StatisticRow>& rows, std::ostream& out, char d) {
  if (rows.empty()) throw EvaluationError("no statistics to write");
  out << "LABEL" << d << "METRIC" << d << "STATISTIC" << d << "VALUE" << d << "EXCLUDED\n";
  for (const auto& r : rows) {
    out << r.label << d << r.metric << d << r.statistic << d << format_value(r.value) << d << r.excluded << '\n';
  }
}

void write_statistics_csv(const std::vector<StatisticRow>& rows, const std::filesystem::path& path, char d) {
  std::ostringstream os;
  write_statistics_csv(rows, os, d);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << os.str();
  if (!f) throw IoError("failed writing " + path.string());
}

std::string write_statistics_console(const std::vector<StatisticRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.label, r.metric, r.statistic, format_value(r.value), std::to_string(r.excluded)});
  }
  return render_table({"LABEL", "METRIC", "STATISTIC", "VALUE", "EXCLUDED"}, cells, 3);
}

}  // namespace mia
