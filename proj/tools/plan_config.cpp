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

#include "plan_config.hpp"

#include <algorithm>
#include <tuple>

#include "mia/error.hpp"
#include "toml.hpp"

namespace mia::cli {

namespace {

std::string where(const toml::node& n) {
  const auto& s = n.source();
  return "line " + std::to_string(s.begin.line);
}

std::string as_string(const toml::node& n, const std::string& what) {
  if (auto v = n.value<std::string>()) return *v;
  throw ConfigError(what + " must be a string (" + where(n) + ")");
}

std::vector<std::string> string_list(const toml::node& n, const std::string& what) {
  std::vector<std::string> out;
  if (n.is_string()) {
    out.push_back(*n.value<std::string>());
    return out;
  }
  const auto* arr = n.as_array();
  if (!arr) throw ConfigError(what + " must be a string or a list of strings (" + where(n) + ")");
  for (const auto& e : *arr) out.push_back(as_string(e, what));
  return out;
}

double as_number(const toml::node& n, const std::string& what) {
  if (auto v = n.value<double>()) return *v;
  throw ConfigError(what + " must be a number (" + where(n) + ")");
}

DType dtype_from(const std::string& name, const std::string& what) {
  try {
    return parse_dtype(name);
  } catch (const Error&) {
    throw ConfigError(what + ": unknown dtype '" + name + "'");
  }
}

using Pos = std::tuple<std::uint32_t, std::uint32_t>;

Pos position(const toml::node& n) { return {n.source().begin.line, n.source().begin.column}; }

}  // namespace

CreationPlan load_creation_plan(const std::filesystem::path& config_path, std::string* dataset_name) {
  toml::table root;
  try {
    root = toml::parse_file(config_path.string());
  } catch (const toml::parse_error& e) {
    throw ConfigError(config_path.string() + ": " + std::string(e.description()) + " (line " +
                      std::to_string(e.source().begin.line) + ")");
  }
  const auto base = config_path.parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };

  CreationPlan plan;
  if (const auto* ds = root["dataset"].as_table()) {
    if (dataset_name) {
      if (const auto* n = ds->get("name")) *dataset_name = as_string(*n, "dataset.name");
    }
    if (const auto* h = ds->get("hash")) {
      const auto v = h->value<bool>();
      if (!v) throw ConfigError("dataset.hash must be a boolean");
      plan.record_hashes = *v;
    }
    if (const auto* names = ds->get("names")) {
      const auto* t = names->as_table();
      if (!t) throw ConfigError("dataset.names must be a table");
      for (const auto& [k, v] : *t) plan.names[std::string(k.str())] = string_list(v, "dataset.names");
    }
    if (const auto* dtypes = ds->get("dtypes")) {
      const auto* t = dtypes->as_table();
      if (!t) throw ConfigError("dataset.dtypes must be a table");
      for (const auto& [k, v] : *t) {
        plan.dtypes[std::string(k.str())] = dtype_from(as_string(v, "dataset.dtypes"), "dataset.dtypes");
      }
    }
  }

  if (const auto* subjects_node = root.get("subject")) {
    const auto* subjects = subjects_node->as_array();
    if (!subjects) throw ConfigError("subject must be an array of tables ([[subject]])");
    for (const auto& s : *subjects) {
      const auto* st = s.as_table();
      if (!st) throw ConfigError("every [[subject]] entry must be a table");
      SubjectPlan sp;
      const auto* id = st->get("id");
      if (!id) throw ConfigError("[[subject]] without id (" + where(s) + ")");
      sp.id = as_string(*id, "subject.id");

      std::vector<std::tuple<Pos, std::string, CategorySource>> cats;
      if (const auto* files = st->get("files")) {
        const auto* ft = files->as_table();
        if (!ft) throw ConfigError("subject.files must be a table");
        for (const auto& [k, v] : *ft) {
          FileList list;
          for (const auto& p : string_list(v, "subject.files." + std::string(k.str()))) list.push_back(resolve(p));
          cats.emplace_back(position(v), std::string(k.str()), std::move(list));
        }
      }
      if (const auto* values = st->get("values")) {
        const auto* vt = values->as_table();
        if (!vt) throw ConfigError("subject.values must be a table");
        for (const auto& [k, v] : *vt) {
          const std::string what = "subject.values." + std::string(k.str());
          InlineValues iv;
          const toml::node* list = &v;
          if (const auto* t = v.as_table()) {
            if (const auto* d = t->get("dtype")) iv.dtype = dtype_from(as_string(*d, what), what);
            list = t->get("values");
            if (!list) throw ConfigError(what + " needs a values list");
          }
          if (const auto* arr = list->as_array()) {
            for (const auto& e : *arr) iv.values.push_back(as_number(e, what));
          } else {
            iv.values.push_back(as_number(*list, what));
          }
          cats.emplace_back(position(v), std::string(k.str()), std::move(iv));
        }
      }
      std::stable_sort(cats.begin(), cats.end(),
                       [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
      for (auto& [pos, name, src] : cats) sp.categories.emplace_back(std::move(name), std::move(src));
      plan.subjects.push_back(std::move(sp));
    }
  }

  if (const auto* tnode = root.get("transforms")) {
    const auto* arr = tnode->as_array();
    if (!arr) throw ConfigError("transforms must be an array of tables ([[transforms]])");
    for (const auto& t : *arr) {
      const auto* tt = t.as_table();
      if (!tt || !tt->get("kind")) throw ConfigError("every transform needs a kind (" + where(t) + ")");
      CreationTransform ct;
      const std::string kind = as_string(*tt->get("kind"), "transforms.kind");
      if (kind == "znormalize") {
        ct.kind = CreationTransform::Kind::kZNormalize;
      } else if (kind == "rescale") {
        ct.kind = CreationTransform::Kind::kRescale;
        if (const auto* v = tt->get("out_min")) ct.out_min = as_number(*v, "transforms.out_min");
        if (const auto* v = tt->get("out_max")) ct.out_max = as_number(*v, "transforms.out_max");
      } else if (kind == "custom") {
        ct.kind = CreationTransform::Kind::kCustom;
        const auto* n = tt->get("name");
        if (!n) throw ConfigError("custom transform needs a name (" + where(t) + ")");
        ct.name = as_string(*n, "transforms.name");
      } else {
        throw ConfigError("unknown transform kind '" + kind + "' (znormalize, rescale, custom)");
      }
      if (const auto* c = tt->get("categories")) ct.categories = string_list(*c, "transforms.categories");
      plan.transforms.push_back(std::move(ct));
    }
  }
  return plan;
}

}  // namespace mia::cli
