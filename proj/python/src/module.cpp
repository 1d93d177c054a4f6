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

// Thin pybind11 layer. Arrays cross the boundary by copy.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <string>

#include "mia/access.hpp"
#include "mia/assembly.hpp"
#include "mia/dataset.hpp"
#include "mia/diagnostics.hpp"
#include "mia/evaluation.hpp"
#include "plan_config.hpp"

namespace py = pybind11;

namespace {

using namespace mia;

template <typename T>
py::array to_numpy_typed(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<T> out(shape);
  const auto v = t.values<T>();
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array to_numpy(const Tensor& t) {
  switch (t.dtype()) {
    case DType::kUInt8: return to_numpy_typed<std::uint8_t>(t);
    case DType::kInt32: return to_numpy_typed<std::int32_t>(t);
    case DType::kFloat32: return to_numpy_typed<float>(t);
    case DType::kFloat64: return to_numpy_typed<double>(t);
  }
  throw ArgumentError("unknown dtype");
}

template <typename T>
Tensor from_typed(const py::array& a) {
  auto c = py::array_t<T, py::array::c_style | py::array::forcecast>::ensure(a);
  Shape shape(c.shape(), c.shape() + c.ndim());
  return Tensor(std::move(shape), std::vector<T>(c.data(), c.data() + c.size()));
}

Tensor from_numpy(const py::array& a) {
  const auto kind = a.dtype().kind();
  if (a.dtype().is(py::dtype::of<std::uint8_t>()) || kind == 'b') return from_typed<std::uint8_t>(a);
  if (kind == 'i' || kind == 'u') return from_typed<std::int32_t>(a);
  if (a.dtype().is(py::dtype::of<float>())) return from_typed<float>(a);
  return from_typed<double>(a);
}

py::dict sample_to_dict(const Sample& s) {
  py::dict d;
  d["index"] = s.index;
  d["subject_index"] = s.subject_index;
  for (const auto& [key, value] : s.entries) {
    std::visit(
        [&](const auto& v) {
          using V = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<V, Tensor>) {
            d[key.c_str()] = to_numpy(v);
          } else if constexpr (std::is_same_v<V, ImageGeometry>) {
            py::dict g;
            g["spacing"] = v.spacing;
            g["origin"] = v.origin;
            d[key.c_str()] = g;
          } else {
            d[key.c_str()] = v;
          }
        },
        value);
  }
  return d;
}

IndexingStrategy make_strategy(const std::string& kind, const Shape& shape, std::size_t axis,
                               const std::vector<std::size_t>& pad) {
  if (kind == "empty") return IndexingStrategy::empty();
  if (kind == "slice") return IndexingStrategy::slice(axis);
  if (kind == "patch") return IndexingStrategy::patch(shape);
  if (kind == "padded_patch") return IndexingStrategy::padded_patch(shape, pad);
  throw ArgumentError("unknown strategy: " + kind);
}

py::list rows(const std::vector<EvaluationResult>& results) {
  py::list out;
  for (const auto& r : results) out.append(py::make_tuple(r.subject_id, r.label_name, r.metric, r.value));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<Error>(m, "MiaError", PyExc_RuntimeError);

  m.def(
      "create_dataset",
      [](const std::filesystem::path& config, const std::filesystem::path& out, bool metadata_only) {
        const CreationPlan plan = cli::load_creation_plan(config);
        const auto s = metadata_only ? create_metadata_dataset(plan, out) : create_dataset(plan, out);
        py::dict d;
        d["subjects"] = s.subjects;
        d["categories"] = s.categories;
        d["payload_bytes"] = s.payload_bytes;
        d["file_bytes"] = s.file_bytes;
        return d;
      },
      py::arg("config"), py::arg("out"), py::arg("metadata_only") = false);

  py::class_<Dataset, std::shared_ptr<Dataset>>(m, "Dataset")
      .def(py::init([](const std::filesystem::path& p) { return std::make_shared<Dataset>(Dataset::open(p)); }))
      .def_property_readonly("subjects", &Dataset::subjects)
      .def_property_readonly("categories", &Dataset::categories)
      .def("channel_names", [](const Dataset& d, const std::string& c) { return d.channel_names(c); })
      .def(
          "read",
          [](const Dataset& d, const std::string& subject, const std::string& category,
             std::vector<std::int64_t> start, Shape size) {
            IndexExpression e;
            e.start = std::move(start);
            e.size = std::move(size);
            return to_numpy(d.read_region(subject, category, e));
          },
          py::arg("subject"), py::arg("category"), py::arg("start") = std::vector<std::int64_t>{},
          py::arg("size") = Shape{})
      .def("__repr__", [](const Dataset& d) { return inspect(d); });

  py::class_<Datasource, std::shared_ptr<Datasource>>(m, "Datasource")
      .def(py::init([](const std::filesystem::path& container, const std::string& strategy, Shape shape,
                       std::size_t axis, std::vector<std::size_t> pad, std::vector<std::string> categories) {
             DatasourceConfig cfg;
             cfg.strategy = make_strategy(strategy, shape, axis, pad);
             cfg.extractors.clear();
             for (const auto& c : categories) {
               cfg.extractors.push_back(strategy == "padded_patch" ? ExtractorSpec::pad(ExtractorSpec::data(c), PadMode::kZero)
                                                                   : ExtractorSpec::data(c));
             }
             auto ds = std::make_shared<const Dataset>(Dataset::open(container));
             return std::make_shared<Datasource>(ds, std::move(cfg));
           }),
           py::arg("container"), py::arg("strategy") = "empty", py::arg("shape") = Shape{}, py::arg("axis") = 0,
           py::arg("pad") = std::vector<std::size_t>{}, py::arg("categories") = std::vector<std::string>{"images"})
      .def("__len__", &Datasource::size)
      .def("__getitem__", [](const Datasource& s, std::size_t i) {
        if (i >= s.size()) throw py::index_error();
        Sample sample;
        {
          py::gil_scoped_release release;
          sample = s.get_sample(i);
        }
        return sample_to_dict(sample);
      })
      .def_property_readonly("subjects", &Datasource::subject_ids);

  py::class_<Assembler>(m, "Assembler")
      .def(py::init([](const Datasource& s) { return std::make_unique<Assembler>(s); }), py::keep_alive<1, 2>())
      .def("add", [](Assembler& a, std::size_t i, const py::array& p) { a.add_prediction(i, from_numpy(p)); })
      .def("is_complete", &Assembler::is_complete)
      .def("assemble", [](const Assembler& a, std::size_t s) { return to_numpy(a.assemble(s)); });

  m.def("metric_abbreviations", &metric_abbreviations);

  m.def(
      "evaluate_segmentation",
      [](const py::array& reference, const py::array& prediction, const std::map<std::int64_t, std::string>& labels,
         const std::string& metrics, std::vector<double> spacing, const std::string& subject) {
        LabelMap map;
        for (const auto& [k, v] : labels) map.add(k, v);
        LabeledImage r{from_numpy(reference).astype(DType::kInt32), {}};
        LabeledImage p{from_numpy(prediction).astype(DType::kInt32), {}};
        if (spacing.empty()) spacing.assign(r.tensor.rank(), 1.0);
        r.geometry = p.geometry = ImageGeometry::with_spacing(spacing);
        return rows(evaluate_segmentation(r, p, map, parse_metric_list(metrics), subject));
      },
      py::arg("reference"), py::arg("prediction"), py::arg("labels"), py::arg("metrics") = "DICE,HDRFDST95,VOLSMTY",
      py::arg("spacing") = std::vector<double>{}, py::arg("subject") = "");

  m.def(
      "evaluate_continuous",
      [](const py::array& reference, const py::array& prediction, const std::string& metrics,
         const std::string& subject) {
        return rows(evaluate_continuous(from_numpy(reference).astype(DType::kFloat64),
                                        from_numpy(prediction).astype(DType::kFloat64), parse_metric_list(metrics),
                                        subject));
      },
      py::arg("reference"), py::arg("prediction"), py::arg("metrics") = "MAE,RMSE,PSNR", py::arg("subject") = "");
}
