// Copyright 2026 The nlosid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings. Structured values (configs, models, reports) travel as
// JSON text and are decoded on the Python side; arrays use numpy buffers.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "nlosid/error.hpp"
#include "nlosid/experiment.hpp"
#include "nlosid/gev.hpp"
#include "nlosid/io.hpp"
#include "nlosid/metrics.hpp"
#include "nlosid/segmentation.hpp"

namespace py = pybind11;
using namespace nlosid;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const DoubleArray& a) {
  const auto view = a.unchecked();
  return {a.data(), a.data() + view.size()};
}

GevParams gev_params(double gamma, double mu, double sigma) { return {gamma, mu, sigma}; }

Json parse(const std::string& text) { return parse_json(text, "<python>"); }

Json feature_row_json(const FeatureRow& r) {
  Json j = Json::object();
  for (Metric m : kAllMetrics) j[std::string(metric_name(m))] = r.features.get(m);
  j["label"] = r.features.label ? Json(std::string(to_string(*r.features.label))) : Json(nullptr);
  j["realization"] = r.realization;
  j["cluster_id"] = r.cluster_id;
  return j;
}

// Maps a NumPy (n_el, n_az) power map onto the grid.
PasMap pas_from_numpy(const DoubleArray& power, const std::string& grid_json) {
  const AngularGrid grid = parse(grid_json).get<AngularGrid>();
  grid.validate();
  if (power.ndim() != 2 || static_cast<std::size_t>(power.shape(0)) != grid.n_el ||
      static_cast<std::size_t>(power.shape(1)) != grid.n_az) {
    throw DataError("power map shape must be (n_el, n_az) = (" + std::to_string(grid.n_el) + ", " +
                    std::to_string(grid.n_az) + ")");
  }
  return PasMap{grid, to_vector(power)};
}

SegParams seg_params(const std::string& params_json, const AngularGrid& grid, double hpbw_deg) {
  if (params_json.empty()) return SegParams::for_grid(grid.az_step, hpbw_deg);
  SegParams p = parse(params_json).get<SegParams>();
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the nlosid package";

  auto base = py::register_exception<Error>(m, "NlosidError");
  auto config = py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  (void)config;
  (void)data;
  (void)numerical;

  m.def("gev_pdf", [](const DoubleArray& x, double gamma, double mu, double sigma) {
    DoubleArray out(x.request().shape);
    const GevParams p = gev_params(gamma, mu, sigma);
    for (py::ssize_t k = 0; k < x.size(); ++k) out.mutable_data()[k] = gev_pdf(x.data()[k], p);
    return out;
  }, py::arg("x"), py::arg("gamma"), py::arg("mu"), py::arg("sigma"));

  m.def("gev_cdf", [](const DoubleArray& x, double gamma, double mu, double sigma) {
    DoubleArray out(x.request().shape);
    const GevParams p = gev_params(gamma, mu, sigma);
    for (py::ssize_t k = 0; k < x.size(); ++k) out.mutable_data()[k] = gev_cdf(x.data()[k], p);
    return out;
  }, py::arg("x"), py::arg("gamma"), py::arg("mu"), py::arg("sigma"));

  m.def("gev_quantile", [](double q, double gamma, double mu, double sigma) {
    return gev_quantile(q, gev_params(gamma, mu, sigma));
  }, py::arg("q"), py::arg("gamma"), py::arg("mu"), py::arg("sigma"));

  m.def("gev_fit", [](const DoubleArray& samples, std::size_t min_samples) {
    GevFitOptions opt;
    opt.min_samples = min_samples;
    const auto v = to_vector(samples);
    const GevFit fit = gev_fit_mle(v, opt);
    py::dict d;
    d["gamma"] = fit.params.gamma;
    d["mu"] = fit.params.mu;
    d["sigma"] = fit.params.sigma;
    d["loglik"] = fit.loglik;
    d["iterations"] = fit.iterations;
    d["rmse"] = cdf_rmse(v, fit.params);
    return d;
  }, py::arg("samples"), py::arg("min_samples") = 20);

  m.def("time_kurtosis", [](const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>& taps) {
    return time_kurtosis(std::span<const Complex>(taps.data(), static_cast<std::size_t>(taps.size())));
  }, py::arg("taps"));

  m.def("segment_json", [](const DoubleArray& power, const std::string& grid_json, const std::string& params_json,
                           double hpbw_deg) {
    const PasMap pas = pas_from_numpy(power, grid_json);
    return Json(segment(pas, seg_params(params_json, pas.grid, hpbw_deg))).dump();
  }, py::arg("power"), py::arg("grid_json"), py::arg("params_json") = "", py::arg("hpbw_deg") = 5.0);

  m.def("simulate_json", [](const std::string& config_json, std::size_t index) {
    const ExperimentConfig c = experiment_config_from_json(parse(config_json));
    c.validate();
    const SimulatedRealization r = simulate_realization(c.sim, c.seed, index);
    const PasMap pas = compute_pas(r.cir);
    const ExtractionResult ex = extract_features(r.cir, c.seg_params(), c.metric, r.channel.truth,
                                                 static_cast<long>(index));
    Json rows = Json::array();
    for (const auto& row : ex.rows) rows.push_back(feature_row_json(row));
    DoubleArray map({pas.grid.n_el, pas.grid.n_az});
    std::copy(pas.power.begin(), pas.power.end(), map.mutable_data());
    Json meta{{"grid", pas.grid}, {"truth", r.channel.truth}, {"clusters", ex.clusters},
              {"features", rows}, {"clusters_found", ex.clusters_found}};
    return py::make_tuple(map, meta.dump());
  }, py::arg("config_json"), py::arg("index") = 0);

  m.def("run_experiment_json", [](const std::string& config_json) {
    ExperimentConfig c = experiment_config_from_json(parse(config_json));
    c.validate();
    ExperimentOutput out;
    {
      py::gil_scoped_release release;
      out = run_experiment(c);
    }
    Json rows = Json::array();
    for (const auto& row : out.features) rows.push_back(feature_row_json(row));
    return Json{{"report", report_to_json(out.report)}, {"features", rows}}.dump();
  }, py::arg("config_json"));

  m.def("render_report", [](const std::string& report_json) {
    return render_report_text(parse(report_json));
  }, py::arg("report_json"));
}
