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

// Command-line driver: simulate, ingest, extract, fit, train, classify,
// experiment and report.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlosid/error.hpp"
#include "nlosid/experiment.hpp"
#include "nlosid/gev.hpp"
#include "nlosid/io.hpp"
#include "nlosid/random.hpp"

namespace fs = std::filesystem;
using namespace nlosid;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> threads;
};

ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig c;
  if (!g.config.empty()) {
    const fs::path p(g.config);
    c = experiment_config_from_json(read_json_file(p), p.parent_path());
  }
  if (g.seed) c.seed = *g.seed;
  if (g.threads) c.threads = *g.threads;
  if (!g.out.empty()) c.output_dir = g.out;
  c.validate();
  return c;
}

fs::path out_dir(const Globals& g) {
  if (g.out.empty()) throw ConfigError("--out <dir> is required");
  fs::create_directories(g.out);
  return g.out;
}

std::string_view stop_name(StopReason r) {
  switch (r) {
    case StopReason::kConverged: return "converged";
    case StopReason::kLossIncrease: return "loss_increase";
    case StopReason::kEpochCap: break;
  }
  return "epoch_cap";
}

std::vector<FeatureVector> labeled(const std::vector<FeatureRow>& rows, const std::string& origin) {
  std::vector<FeatureVector> out;
  for (const auto& r : rows) {
    if (!r.features.label) throw DataError(origin + ": every row needs a LOS/NLOS label");
    out.push_back(r.features);
  }
  return out;
}

int run_simulate(const Globals& g, std::optional<std::size_t> n) {
  ExperimentConfig c = load_config(g);
  if (n) c.n_realizations = *n;
  const Json manifest = cmd_simulate(c, out_dir(g));
  std::printf("wrote %zu realizations to %s\n", manifest.at("n_realizations").get<std::size_t>(),
              g.out.c_str());
  return 0;
}

int run_ingest(const Globals& g, const std::vector<std::string>& inputs, const std::string& grid_file,
               const std::string& window_name, const std::string& name) {
  Window window = Window::kHann;
  if (window_name == "none") {
    window = Window::kNone;
  } else if (window_name != "hann") {
    throw ConfigError("--window must be 'hann' or 'none'");
  }
  std::optional<AngularGrid> grid;
  if (!grid_file.empty()) grid = read_json_file(grid_file).get<AngularGrid>();
  std::vector<SweepSample> samples;
  for (const auto& in : inputs) {
    auto part = read_sweep_csv(in);
    samples.insert(samples.end(), part.begin(), part.end());
  }
  const CirTensor cir = ingest_sweeps(samples, grid, window);
  const fs::path manifest = out_dir(g) / (name + ".cir.json");
  write_cir_tensor(manifest, cir, Json{{"source_files", inputs}, {"window", window_name}});
  write_pas_json(out_dir(g) / (name + ".pas.json"), compute_pas(cir));
  std::printf("wrote %s (%zu x %zu directions, %zu taps)\n", manifest.string().c_str(),
              cir.grid().n_el, cir.grid().n_az, cir.n_taps());
  return 0;
}

int run_extract(const Globals& g, const std::vector<std::string>& inputs) {
  const ExperimentConfig c = load_config(g);
  std::vector<fs::path> paths(inputs.begin(), inputs.end());
  const ExtractionResult r = cmd_extract(paths, c.seg_params(), c.metric, c.threads);
  const fs::path dir = out_dir(g);
  write_feature_csv(dir / "features.csv", r.rows);
  Json skipped = Json::array();
  for (const auto& s : r.skipped) {
    skipped.push_back({{"realization", s.realization}, {"cluster_id", s.cluster_id}, {"reason", s.reason}});
  }
  write_json_file(dir / "extract_log.json", Json{{"clusters_found", r.clusters_found},
                                                 {"rows", r.rows.size()},
                                                 {"skipped_clusters", skipped}});
  write_json_file(dir / "clusters.json", Json(r.clusters));
  std::printf("%zu clusters, %zu feature rows, %zu skipped\n", r.clusters_found, r.rows.size(),
              r.skipped.size());
  return 0;
}

int run_fit(const Globals& g, const std::string& input, std::optional<std::size_t> min_class) {
  const ExperimentConfig c = load_config(g);
  const auto fvs = labeled(read_feature_csv(input), input);
  const MlrModel model = mlr_train(fvs, min_class.value_or(c.class_min()));
  const fs::path dir = out_dir(g);
  Json table = Json::object();
  for (Metric m : kAllMetrics) {
    Json entry = Json::object();
    for (PathKind k : {PathKind::kLos, PathKind::kNlos}) {
      const GevParams& p = k == PathKind::kLos ? model.at(m).los : model.at(m).nlos;
      std::vector<double> values;
      for (const auto& f : fvs) {
        if (f.label == k) values.push_back(f.get(m));
      }
      entry[std::string(to_string(k))] = Json{{"gamma", p.gamma}, {"mu", p.mu}, {"sigma", p.sigma},
                                              {"rmse", cdf_rmse(values, p)}, {"n", values.size()}};
      write_text_file(dir / "curves" /
                          (std::string(metric_name(m)) + "_" + std::string(to_string(k)) + ".csv"),
                      curve_csv(values, p));
    }
    table[std::string(metric_name(m))] = entry;
  }
  write_json_file(dir / "gev_table.json", table);
  std::cout << table.dump(2) << "\n";
  return 0;
}

int run_train(const Globals& g, const std::string& input, std::optional<std::size_t> min_class) {
  const ExperimentConfig c = load_config(g);
  const auto fvs = labeled(read_feature_csv(input), input);
  const fs::path dir = out_dir(g);
  const MlrModel mlr = mlr_train(fvs, min_class.value_or(c.class_min()));
  const AnnTrainResult ann = ann_train(ann_init(derive_seed(c.seed, 0xA22A22A22ull)), fvs, c.ann);
  write_json_file(dir / "mlr_model.json", Json(mlr));
  write_json_file(dir / "ann_model.json", Json(ann.model));
  write_json_file(dir / "train_log.json", Json{{"epochs", ann.epochs},
                                               {"stop", stop_name(ann.stop)},
                                               {"loss_history", ann.loss_history}});
  std::printf("trained on %zu samples; ANN stopped after %zu epochs (%s), loss %.6g\n", fvs.size(),
              ann.epochs, std::string(stop_name(ann.stop)).c_str(), ann.loss_history.back());
  return 0;
}

int run_classify(const Globals& g, const std::string& input, const std::string& mlr_path,
                 const std::string& ann_path, const std::vector<std::string>& subset_names) {
  if (mlr_path.empty() && ann_path.empty()) throw ConfigError("classify needs --mlr and/or --ann");
  const auto rows = read_feature_csv(input);
  std::vector<Metric> subset;
  for (const auto& n : subset_names) subset.push_back(metric_from_name(n));
  if (subset.empty()) subset.assign(kAllMetrics.begin(), kAllMetrics.end());

  struct Column {
    std::string name;
    std::vector<Verdict> verdicts;
  };
  std::vector<Column> cols;
  if (!mlr_path.empty()) {
    const auto model = read_json_file(mlr_path).get<MlrModel>();
    Column col{"MLR", {}};
    for (const auto& r : rows) col.verdicts.push_back(mlr_classify(model, r.features, subset));
    cols.push_back(std::move(col));
  }
  if (!ann_path.empty()) {
    const auto model = read_json_file(ann_path).get<AnnModel>();
    Column col{"ANN", {}};
    for (const auto& r : rows) col.verdicts.push_back(ann_classify(model, r.features));
    cols.push_back(std::move(col));
  }

  std::string csv = "classifier,sample,realization,cluster_id,decision,score,support_violation,truth\n";
  for (const auto& col : cols) {
    for (std::size_t s = 0; s < rows.size(); ++s) {
      const Verdict& v = col.verdicts[s];
      csv += col.name + ',' + std::to_string(s) + ',' + std::to_string(rows[s].realization) + ',' +
             std::to_string(rows[s].cluster_id) + ',' + std::string(to_string(v.decision)) + ',' +
             format_double(v.score) + ',' + (v.support_violation ? "1" : "0") + ',' +
             (rows[s].features.label ? std::string(to_string(*rows[s].features.label)) : "") + '\n';
    }
  }
  if (g.out.empty()) {
    std::cout << csv;
  } else {
    write_text_file(out_dir(g) / "verdicts.csv", csv);
  }

  const bool all_labeled =
      std::all_of(rows.begin(), rows.end(), [](const FeatureRow& r) { return r.features.label.has_value(); });
  if (all_labeled && !rows.empty()) {
    std::vector<PathKind> truths;
    for (const auto& r : rows) truths.push_back(*r.features.label);
    for (const auto& col : cols) {
      const ErrorRates e = error_rates(col.verdicts, truths);
      std::fprintf(stderr, "%s: type I %.4f (%zu/%zu)  type II %.4f (%zu/%zu)\n", col.name.c_str(),
                   e.type_i, e.n_type_i, e.n_los, e.type_ii, e.n_type_ii, e.n_nlos);
    }
  }
  return 0;
}

int run_experiment_cmd(const Globals& g) {
  const ExperimentConfig c = load_config(g);
  const ExperimentOutput out = run_experiment(c);
  std::cout << render_report_text(report_to_json(out.report));
  return 0;
}

int run_report(const Globals& g, const std::string& input) {
  const std::string text = render_report_text(read_json_file(input));
  if (g.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(out_dir(g) / "report.txt", text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial NLOS identification from beam-sweep power angular spectra"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "Experiment configuration JSON");
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::optional<std::size_t> n_real;
  auto* sim = app.add_subcommand("simulate", "Render CIR tensors and PAS maps per realization");
  sim->add_option("-n,--realizations", n_real, "Number of realizations (overrides the config)");

  std::vector<std::string> sweep_files;
  std::string grid_file, window = "hann", tensor_name = "ingested";
  auto* ingest = app.add_subcommand("ingest", "Assemble measured frequency sweeps into a CIR tensor");
  ingest->add_option("sweeps", sweep_files, "Sweep CSV files (az_deg,el_deg,freq_ghz,re,im)")
      ->required()
      ;
  ingest->add_option("--grid", grid_file, "Grid JSON; inferred from the sweeps when absent");
  ingest->add_option("--window", window, "Window before the inverse transform: hann or none");
  ingest->add_option("--name", tensor_name, "Output file stem");

  std::vector<std::string> tensors;
  auto* extract = app.add_subcommand("extract", "Segment tensors and compute cluster features");
  extract->add_option("inputs", tensors, "CIR tensor manifests or a simulate manifest.json")
      ->required()
      ;

  std::string features;
  std::optional<std::size_t> min_class;
  auto* fit = app.add_subcommand("fit", "Fit per-class GEV distributions to a feature CSV");
  fit->add_option("features", features, "Feature CSV")->required();
  fit->add_option("--min-class", min_class, "Minimum samples per class");

  auto* train = app.add_subcommand("train", "Train the MLR and ANN classifiers");
  train->add_option("features", features, "Labeled feature CSV")->required();
  train->add_option("--min-class", min_class, "Minimum samples per class");

  std::string mlr_model, ann_model;
  std::vector<std::string> subset;
  auto* classify = app.add_subcommand("classify", "Classify feature rows with trained models");
  classify->add_option("features", features, "Feature CSV")->required();
  classify->add_option("--mlr", mlr_model, "MLR model JSON");
  classify->add_option("--ann", ann_model, "ANN model JSON");
  classify->add_option("--metrics", subset, "MLR metric subset (default: all five)");

  auto* experiment = app.add_subcommand("experiment", "Run the full train/test protocol");

  std::string report_file;
  auto* report = app.add_subcommand("report", "Render a report JSON as text");
  report->add_option("report", report_file, "report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (*sim) return run_simulate(g, n_real);
    if (*ingest) return run_ingest(g, sweep_files, grid_file, window, tensor_name);
    if (*extract) return run_extract(g, tensors);
    if (*fit) return run_fit(g, features, min_class);
    if (*train) return run_train(g, features, min_class);
    if (*classify) return run_classify(g, features, mlr_model, ann_model, subset);
    if (*experiment) return run_experiment_cmd(g);
    if (*report) return run_report(g, report_file);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kData);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kData);
  }
  return static_cast<int>(ExitCode::kConfig);
}
