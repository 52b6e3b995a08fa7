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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nlosid/channel_sim.hpp"
#include "nlosid/classifiers.hpp"
#include "nlosid/gev.hpp"
#include "nlosid/io.hpp"
#include "nlosid/metrics.hpp"
#include "nlosid/segmentation.hpp"

namespace nlosid {

enum class ExperimentMode { kSimulate, kMeasured };

struct BootstrapConfig {
  std::size_t n_train = 30;
  std::size_t n_test = 20;
  std::size_t repeats = 10;
};

struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::kSimulate;
  SimConfig sim;
  std::optional<SegParams> seg;  // defaults derived from the sweep grid
  MetricConfig metric;
  std::size_t n_realizations = 250;
  std::size_t n_train = 150;
  std::size_t n_test = 100;
  BootstrapConfig bootstrap;
  std::filesystem::path measured_features;  // measured mode input
  AnnSchedule ann;
  // Minimum per-class training samples for each GEV fit; measured-mode
  // bootstrap sets are small, so that mode defaults lower.
  std::optional<std::size_t> min_class_samples;
  std::uint64_t seed = 2021;
  std::size_t threads = 1;
  std::filesystem::path output_dir;
  bool write_curves = true;

  void validate() const;
  [[nodiscard]] SegParams seg_params() const;
  [[nodiscard]] std::size_t class_min() const;
};

void to_json(Json& j, const ExperimentConfig& c);
// Relative measured-feature paths resolve against `base_dir`.
[[nodiscard]] ExperimentConfig experiment_config_from_json(const Json& j,
                                                           const std::filesystem::path& base_dir = {});

// ---------------------------------------------------------------------------
// Pipeline stages

struct SimulatedRealization {
  std::size_t index = 0;
  SimConfig config;  // carries the derived seed
  Channel channel;
  CirTensor cir;  // quantized to the on-disk c64 resolution
};

// Realization `index` draws from derive_seed(master_seed, index).
[[nodiscard]] SimulatedRealization simulate_realization(const SimConfig& base,
                                                        std::uint64_t master_seed,
                                                        std::size_t index);

struct SkippedCluster {
  long realization = -1;
  int cluster_id = -1;
  std::string reason;
};

struct ExtractionResult {
  std::vector<FeatureRow> rows;
  std::vector<SkippedCluster> skipped;
  std::size_t clusters_found = 0;
  bool los_present = false;
  bool los_missed = false;
  std::vector<Cluster> clusters;
};

// segment -> (label) -> cluster_features; degenerate clusters are skipped and
// recorded, never silently dropped.
[[nodiscard]] ExtractionResult extract_features(const CirTensor& cir, const SegParams& seg,
                                                const MetricConfig& metric,
                                                const std::optional<GroundTruth>& truth,
                                                long realization);

// Assembles per-direction inverse transforms of measured sweeps into a
// tensor. When `grid` is absent it is inferred from the sample directions.
// Throws DataError listing any absent (az, el).
[[nodiscard]] CirTensor ingest_sweeps(const std::vector<SweepSample>& samples,
                                      const std::optional<AngularGrid>& grid, Window window);

// Runs `task(i)` for i in [0, n) on a pool of `threads` workers.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& task);

// ---------------------------------------------------------------------------
// Evaluation and reporting

struct GevTableEntry {
  GevParams params;
  double rmse = 0.0;
  std::size_t n = 0;
};

// [metric][class]; class 0 = LOS, 1 = NLOS.
using GevTable = std::array<std::array<GevTableEntry, 2>, 5>;

struct ErrorRow {
  std::string name;        // r_p, k_t, k_f, tau_mean, tau_rms, joint-MLR, ANN
  std::string classifier;  // MLR or ANN
  std::vector<Metric> metrics;
  ErrorRates rates;
};

struct VerdictLogEntry {
  std::string row;
  std::size_t sample = 0;
  PathKind truth = PathKind::kLos;
  Verdict verdict;
};

struct Evaluation {
  MlrModel mlr;
  AnnModel ann;
  GevTable gev;
  std::vector<ErrorRow> errors;
  std::vector<VerdictLogEntry> verdicts;
  std::vector<double> ann_loss_history;
};

// Train both classifiers on `train`, score every error-table row on `test`.
[[nodiscard]] Evaluation train_and_evaluate(std::span<const FeatureVector> train,
                                            std::span<const FeatureVector> test,
                                            std::size_t min_class_samples,
                                            const AnnSchedule& schedule, std::uint64_t ann_seed);

// Error-table row names in report order.
[[nodiscard]] const std::vector<std::string>& error_row_names();

// One CSV per metric-class pair: x, empirical_pdf, fitted_pdf, empirical_cdf,
// fitted_cdf.
[[nodiscard]] std::string curve_csv(std::span<const double> samples, const GevParams& fit,
                                    std::size_t bins = 40);

struct RealizationDiag {
  std::size_t index = 0;
  std::size_t clusters_found = 0;
  std::size_t features = 0;
  std::size_t skipped = 0;
  bool los_present = false;
  bool los_recovered = false;
  bool train = false;
};

struct Report {
  ExperimentMode mode = ExperimentMode::kSimulate;
  std::uint64_t seed = 0;
  GevTable gev{};
  std::vector<ErrorRow> errors;
  // Per-metric medians by class over every extracted feature.
  std::array<std::array<double, 2>, 5> medians{};
  std::vector<RealizationDiag> realizations;
  std::vector<SkippedCluster> skipped;
  std::size_t n_train_features = 0;
  std::size_t n_test_features = 0;
  std::vector<std::vector<ErrorRow>> bootstrap_repeats;  // measured mode
  std::vector<Partition> bootstrap_partitions;           // sample-group indices
  std::vector<std::string> curve_files;
};

[[nodiscard]] Json report_to_json(const Report& r);
[[nodiscard]] std::string render_report_text(const Json& report);

struct ExperimentOutput {
  Report report;
  std::vector<FeatureRow> features;
  std::vector<VerdictLogEntry> verdicts;
  Evaluation evaluation;  // simulate mode, or the last bootstrap repeat
};

// Full protocol; writes report.json, features.csv, verdicts.csv, models and
// curves under config.output_dir when it is non-empty.
[[nodiscard]] ExperimentOutput run_experiment(const ExperimentConfig& config);

// Writes realization_NNNN.{cir.json,bin,pas.json,truth.json} plus
// manifest.json; returns the manifest.
Json cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir);

// Extracts features from CirTensor manifests (or a simulate manifest). Truth
// comes from a sibling *.truth.json when present.
[[nodiscard]] ExtractionResult cmd_extract(const std::vector<std::filesystem::path>& inputs,
                                           const SegParams& seg, const MetricConfig& metric,
                                           std::size_t threads);

}  // namespace nlosid
