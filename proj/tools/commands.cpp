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

#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "bench.hpp"
#include "mia/dataset.hpp"
#include "mia/error.hpp"
#include "mia/evaluation.hpp"
#include "mia/imageio.hpp"
#include "plan_config.hpp"

namespace mia::cli {

namespace fs = std::filesystem;

namespace {

// Bad flags or inputs that the user has to fix; exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

char parse_delimiter(const std::string& d) {
  if (d == "tab" || d == "\\t") return '\t';
  if (d.size() != 1) throw UsageError("--delimiter must be a single character (or 'tab')");
  return d[0];
}

std::string join(const std::vector<std::string>& v, const std::string& sep = ", ") {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : sep) + x;
  return s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

// --- create / inspect ------------------------------------------------------

struct CreateArgs {
  std::string config;
  std::string out;
  bool metadata_only = false;
  bool hash = false;
};

int cmd_create(const CreateArgs& a, std::ostream& out) {
  std::string name;
  CreationPlan plan = load_creation_plan(a.config, &name);
  plan.metadata_only = a.metadata_only;
  plan.record_hashes = plan.record_hashes || a.hash;
  const auto summary = create_dataset(plan, a.out);
  out << "created " << a.out << (name.empty() ? "" : " (" + name + ")") << '\n'
      << "  subjects:      " << summary.subjects << '\n'
      << "  categories:    " << join(summary.categories) << '\n'
      << "  payload bytes: " << summary.payload_bytes << '\n'
      << "  file bytes:    " << summary.file_bytes << '\n';
  return 0;
}

int cmd_inspect(const std::string& path, std::ostream& out) {
  const Dataset ds = Dataset::open(path);
  out << inspect(ds);
  return 0;
}

// --- evaluate ----------------------------------------------------------------

struct EvaluateArgs {
  std::string ref, pred, pairs, labels;
  std::string metrics = "DICE,HDRFDST95,VOLSMTY";
  double percentile = 100.0;
  double tolerance = 1.0;
  double beta = 1.0;
  std::optional<std::size_t> slice;
  std::optional<double> data_range;
  std::string out;
  std::string delimiter = ";";
  std::size_t workers = 0;
};

bool is_image_file(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".mha" || ext == ".mhd" || ext == ".npy";
}

bool wildcard_match(const std::string& pattern, const std::string& name, std::string& captured) {
  const auto star = pattern.find('*');
  const std::string pre = pattern.substr(0, star), post = pattern.substr(star + 1);
  if (name.size() < pre.size() + post.size()) return false;
  if (name.compare(0, pre.size(), pre) != 0) return false;
  if (name.compare(name.size() - post.size(), post.size(), post) != 0) return false;
  captured = name.substr(pre.size(), name.size() - pre.size() - post.size());
  return true;
}

// Subject key -> file. A directory contributes every image file keyed by
// stem; a pattern with one '*' keys files by the text the star matched.
std::map<std::string, fs::path> collect_images(const std::string& spec, const std::string& flag) {
  std::map<std::string, fs::path> out;
  const fs::path p(spec);
  if (fs::is_directory(p)) {
    for (const auto& e : fs::directory_iterator(p)) {
      if (e.is_regular_file() && is_image_file(e.path())) out[e.path().stem().string()] = e.path();
    }
  } else if (p.filename().string().find('*') != std::string::npos) {
    const std::string pattern = p.filename().string();
    if (std::count(pattern.begin(), pattern.end(), '*') != 1) {
      throw UsageError(flag + " pattern must contain exactly one '*'");
    }
    const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
    if (!fs::is_directory(dir)) throw IoError(flag + ": no such directory " + dir.string());
    for (const auto& e : fs::directory_iterator(dir)) {
      std::string key;
      if (e.is_regular_file() && wildcard_match(pattern, e.path().filename().string(), key)) out[key] = e.path();
    }
  } else if (fs::is_regular_file(p)) {
    out[p.stem().string()] = p;
  } else {
    throw IoError(flag + ": no such file or directory " + spec);
  }
  if (out.empty()) throw IoError(flag + ": no image files found in " + spec);
  return out;
}

struct Pair {
  std::string subject;
  fs::path ref, pred;
};

std::vector<Pair> read_pairs(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pairs file " + path.string());
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& s) {
    const fs::path q(s);
    return q.is_absolute() ? q : base / q;
  };
  std::vector<Pair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, '\t');) cells.push_back(c);
    if (cells.size() != 3) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected subject<TAB>reference<TAB>prediction");
    }
    out.push_back({cells[0], resolve(cells[1]), resolve(cells[2])});
  }
  return out;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  const char delim = parse_delimiter(a.delimiter);
  MetricSpec defaults;
  defaults.percentile = a.percentile;
  defaults.tolerance_mm = a.tolerance;
  defaults.beta = a.beta;
  defaults.slice_index = a.slice;
  defaults.data_range = a.data_range;
  std::vector<MetricSpec> metrics;
  try {
    metrics = parse_metric_list(a.metrics, defaults);
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  const bool continuous = metrics.front().is_continuous();
  for (const auto& m : metrics) {
    if (m.is_continuous() != continuous) {
      throw UsageError("segmentation and continuous metrics cannot share one results table");
    }
  }
  LabelMap labels;
  if (!continuous) {
    if (a.labels.empty()) throw UsageError("--labels is required for segmentation metrics");
    try {
      labels = LabelMap::read(a.labels);
    } catch (const ArgumentError& e) {
      throw UsageError(e.what());
    }
  }

  std::vector<Pair> pairs;
  if (!a.pairs.empty()) {
    pairs = read_pairs(a.pairs);
  } else {
    if (a.ref.empty() || a.pred.empty()) throw UsageError("give --ref and --pred, or --pairs");
    const auto refs = collect_images(a.ref, "--ref");
    const auto preds = collect_images(a.pred, "--pred");
    std::vector<std::string> no_pred, no_ref;
    for (const auto& [k, v] : refs) {
      if (!preds.count(k)) no_pred.push_back(k);
    }
    for (const auto& [k, v] : preds) {
      if (!refs.count(k)) no_ref.push_back(k);
    }
    if (!no_pred.empty() || !no_ref.empty()) {
      if (!no_pred.empty()) err << "error: no prediction for: " << join(no_pred) << '\n';
      if (!no_ref.empty()) err << "error: no reference for: " << join(no_ref) << '\n';
      return 1;
    }
    for (const auto& [k, v] : refs) pairs.push_back({k, v, preds.at(k)});
  }
  if (pairs.empty()) throw UsageError("nothing to evaluate");

  std::size_t workers = a.workers ? a.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, pairs.size());
  std::vector<std::vector<EvaluationResult>> per_subject(pairs.size());
  std::vector<std::string> failures(pairs.size());
  std::atomic<std::size_t> next{0}, done{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      const auto& p = pairs[i];
      try {
        Image r = read_image(p.ref);
        Image q = read_image(p.pred);
        per_subject[i] = continuous ? evaluate_continuous(r.tensor, q.tensor, metrics, p.subject)
                                    : evaluate_segmentation({std::move(r.tensor), std::move(r.geometry)},
                                                            {std::move(q.tensor), std::move(q.geometry)}, labels,
                                                            metrics, p.subject);
      } catch (const std::exception& e) {
        failures[i] = p.subject + ": " + e.what();
      }
      std::lock_guard lock(log_mutex);
      err << "[" << ++done << "/" << pairs.size() << "] " << p.subject << (failures[i].empty() ? "" : " failed")
          << '\n';
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  bool failed = false;
  for (const auto& f : failures) {
    if (!f.empty()) {
      err << "error: " << f << '\n';
      failed = true;
    }
  }
  if (failed) return 1;

  std::vector<EvaluationResult> results;
  for (auto& v : per_subject) results.insert(results.end(), v.begin(), v.end());
  if (a.out.empty()) {
    out << write_console(results);
  } else {
    write_csv(results, fs::path(a.out), delim);
    out << "wrote " << pairs.size() << " subjects to " << a.out << '\n';
  }
  return 0;
}

// --- stats ------------------------------------------------------------------

int cmd_stats(const std::string& input, const std::string& functions, const std::string& out_path,
              const std::string& delimiter, std::ostream& out) {
  const char delim = parse_delimiter(delimiter);
  std::vector<NamedReducer> reducers;
  try {
    reducers = parse_reducer_list(functions);
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  const auto results = read_csv(fs::path(input), delim);
  const auto rows = aggregate(results, reducers);
  if (out_path.empty()) {
    out << write_statistics_console(rows);
  } else {
    write_statistics_csv(rows, fs::path(out_path), delim);
    out << "wrote " << rows.size() << " statistics to " << out_path << '\n';
  }
  return 0;
}

// --- bench ------------------------------------------------------------------

int cmd_bench(BenchConfig cfg, const std::string& shape, const std::string& variants,
              const std::string& strategies, const std::string& out_path, bool bars, std::ostream& out,
              std::ostream& err) {
  const auto extents = split_list(shape);
  cfg.shape.clear();
  for (const auto& e : extents) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(e, &pos);
      if (pos != e.size() || v <= 0) throw std::invalid_argument(e);
      cfg.shape.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError("--shape expects positive integers Z,Y,X");
    }
  }
  if (cfg.shape.size() != 3) throw UsageError("--shape expects three extents Z,Y,X");
  cfg.variants = split_list(variants);
  cfg.strategies = split_list(strategies);
  std::vector<BenchRow> rows;
  try {
    rows = run_bench(cfg, err);
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  std::ostringstream csv;
  write_bench_csv(rows, csv);
  if (out_path.empty()) {
    out << csv.str();
  } else {
    write_text(out_path, csv.str());
    out << "wrote " << rows.size() << " rows to " << out_path << '\n';
  }
  if (bars) out << bench_bars(rows);
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Medical image dataset and evaluation toolkit", "mia"};
  app.require_subcommand(1);

  CreateArgs create;
  auto* c = app.add_subcommand("create", "Create a dataset container from a TOML config");
  c->add_option("config", create.config, "Creation config (TOML)")->required()->check(CLI::ExistingFile);
  c->add_option("--out,-o", create.out, "Output container path")->required();
  c->add_flag("--metadata-only", create.metadata_only, "Store metadata only; payloads stay in the source files");
  c->add_flag("--hash", create.hash, "Record SHA-256 hashes of the source files");

  std::string inspect_path;
  auto* i = app.add_subcommand("inspect", "Print the structure of a container");
  i->add_option("dataset", inspect_path, "Container path")->required();

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Evaluate predictions against references");
  e->add_option("--ref", ev.ref, "Reference directory, file or pattern with one '*'");
  e->add_option("--pred", ev.pred, "Prediction directory, file or pattern with one '*'");
  e->add_option("--pairs", ev.pairs, "Manifest of subject<TAB>reference<TAB>prediction lines");
  e->add_option("--labels", ev.labels, "Labels file: one int<TAB>name line per label");
  e->add_option("--metrics", ev.metrics, "Comma-separated metric abbreviations")->capture_default_str();
  e->add_option("--hausdorff-percentile", ev.percentile, "Percentile for HDRFDST without suffix")
      ->capture_default_str();
  e->add_option("--tolerance-mm", ev.tolerance, "Tolerance for SURFOVLP and SURFDICE")->capture_default_str();
  e->add_option("--beta", ev.beta, "Beta for FMEASR")->capture_default_str();
  e->add_option("--slice", ev.slice, "Axis-0 slice for AREA (default: central slice)");
  e->add_option("--data-range", ev.data_range, "Data range for PSNR and SSIM (default: reference range)");
  e->add_option("--out,-o", ev.out, "CSV output (default: table on stdout)");
  e->add_option("--delimiter", ev.delimiter, "CSV delimiter")->capture_default_str();
  e->add_option("--workers,-j", ev.workers, "Subjects evaluated in parallel (default: all cores)");

  std::string stats_in, stats_functions = "MEAN,STD", stats_out, stats_delim = ";";
  auto* s = app.add_subcommand("stats", "Aggregate an evaluation CSV over subjects");
  s->add_option("results", stats_in, "Evaluation results CSV")->required()->check(CLI::ExistingFile);
  s->add_option("--functions", stats_functions, "MEAN, STD, MEDIAN, MIN, MAX, P25, P75")->capture_default_str();
  s->add_option("--out,-o", stats_out, "CSV output (default: table on stdout)");
  s->add_option("--delimiter", stats_delim, "CSV delimiter")->capture_default_str();

  BenchConfig bench;
  std::string shape = "181,217,181", variants = join(kBenchVariants, ","), strategies = join(kBenchStrategies, ",");
  std::string bench_out, workdir;
  bool bars = false;
  auto* b = app.add_subcommand("bench", "Benchmark loading from the container and from image files");
  b->add_option("--subjects", bench.subjects, "Synthetic subjects")->capture_default_str();
  b->add_option("--shape", shape, "Image shape Z,Y,X")->capture_default_str();
  b->add_option("--variants", variants, "Storage variants")->capture_default_str();
  b->add_option("--strategies", strategies, "Indexing strategies")->capture_default_str();
  b->add_option("--runs", bench.runs, "Timed passes")->capture_default_str();
  b->add_option("--patch", bench.patch, "Patch edge length")->capture_default_str();
  b->add_option("--max-samples", bench.max_samples, "Samples timed per pass (0: all)")->capture_default_str();
  b->add_option("--seed", bench.seed, "Seed for fixtures and sample subsets")->capture_default_str();
  b->add_option("--workdir", workdir, "Directory for the fixtures (default: a temp directory)");
  b->add_flag("--keep", bench.keep, "Keep the generated fixtures");
  b->add_option("--out,-o", bench_out, "CSV output (default: stdout)");
  b->add_flag("--bars", bars, "Print a text bar chart");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& pe) {
    // help for a subcommand arrives here as well
    if (pe.get_exit_code() == 0) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return 0;
    }
    err << "error: " << pe.what() << '\n';
    return 2;
  }

  try {
    if (c->parsed()) return cmd_create(create, out);
    if (i->parsed()) return cmd_inspect(inspect_path, out);
    if (e->parsed()) return cmd_evaluate(ev, out, err);
    if (s->parsed()) return cmd_stats(stats_in, stats_functions, stats_out, stats_delim, out);
    if (b->parsed()) {
      bench.workdir = workdir;
      return cmd_bench(bench, shape, variants, strategies, bench_out, bars, out, err);
    }
  } catch (const UsageError& ue) {
    err << "error: " << ue.what() << '\n';
    return 2;
  } catch (const ConfigError& ce) {
    err << "error: " << ce.what() << '\n';
    return 2;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace mia::cli
