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
#include <span>
#include <vector>

#include "nlosid/channel_sim.hpp"
#include "nlosid/gev.hpp"
#include "nlosid/metrics.hpp"

namespace nlosid {

struct Verdict {
  PathKind decision = PathKind::kLos;
  double score = 0.0;
  // MLR only: some metric fell outside a fitted support.
  bool support_violation = false;
};

// ---------------------------------------------------------------------------
// Maximum-likelihood ratio test

struct MetricPair {
  GevParams los;
  GevParams nlos;
  friend bool operator==(const MetricPair&, const MetricPair&) = default;
};

struct MlrModel {
  std::array<MetricPair, 5> metrics;  // indexed by Metric

  [[nodiscard]] const MetricPair& at(Metric m) const noexcept {
    return metrics[static_cast<std::size_t>(m)];
  }
  [[nodiscard]] MetricPair& at(Metric m) noexcept { return metrics[static_cast<std::size_t>(m)]; }

  friend bool operator==(const MlrModel&, const MlrModel&) = default;
};

// Log-density used for a value outside a fitted support; keeps joint scores
// finite and ordered.
inline constexpr double kLogDensityFloor = -745.0;

// Fits a GEV per metric and class. Throws TrainingError naming the class and
// metric when a class has fewer than min_class_samples samples or a fit fails.
[[nodiscard]] MlrModel mlr_train(std::span<const FeatureVector> features,
                                 std::size_t min_class_samples = 20);

// Sum of per-metric log-likelihood ratios over `subset`; LOS iff score >= 0.
[[nodiscard]] Verdict mlr_classify(const MlrModel& model, const FeatureVector& fv,
                                   std::span<const Metric> subset);

// ---------------------------------------------------------------------------
// Feed-forward 5-10-10-2 network

inline constexpr std::size_t kAnnInputs = 5;
inline constexpr std::size_t kAnnHidden = 10;
inline constexpr std::size_t kAnnOutputs = 2;

// Network input order.
inline constexpr std::array<Metric, kAnnInputs> kAnnInputOrder{
    Metric::kRp, Metric::kKt, Metric::kTauMean, Metric::kTauRms, Metric::kKf};

struct FeatureNorm {
  double mean = 0.0;
  double scale = 1.0;
  friend bool operator==(const FeatureNorm&, const FeatureNorm&) = default;
};

// Row-major weight matrices: iw is hidden x inputs, lw21 hidden x hidden,
// lw32 outputs x hidden. Output 0 is LOS, output 1 NLOS.
struct AnnModel {
  std::array<double, kAnnHidden * kAnnInputs> iw{};
  std::array<double, kAnnHidden * kAnnHidden> lw21{};
  std::array<double, kAnnOutputs * kAnnHidden> lw32{};
  std::array<double, kAnnHidden> b1{};
  std::array<double, kAnnHidden> b2{};
  std::array<double, kAnnOutputs> b3{};
  std::array<FeatureNorm, kAnnInputs> feature_norms{};

  friend bool operator==(const AnnModel&, const AnnModel&) = default;
};

// 2 / (1 + exp(-2x)) - 1
[[nodiscard]] double tansig(double x) noexcept;

struct AnnActivations {
  std::array<double, kAnnInputs> input{};  // standardized
  std::array<double, kAnnHidden> hidden1{};
  std::array<double, kAnnHidden> hidden2{};
  std::array<double, kAnnOutputs> output{};  // softmax, sums to 1
};

// Glorot-uniform weights, zero biases, identity feature norms.
[[nodiscard]] AnnModel ann_init(std::uint64_t seed);

[[nodiscard]] std::array<double, kAnnInputs> ann_raw_inputs(const FeatureVector& fv) noexcept;
[[nodiscard]] AnnActivations ann_forward(const AnnModel& model,
                                         std::span<const double, kAnnInputs> raw_input) noexcept;
[[nodiscard]] AnnActivations ann_forward(const AnnModel& model, const FeatureVector& fv) noexcept;

// Parameters flattened in the order iw, b1, lw21, b2, lw32, b3.
inline constexpr std::size_t kAnnParamCount =
    kAnnHidden * kAnnInputs + kAnnHidden + kAnnHidden * kAnnHidden + kAnnHidden +
    kAnnOutputs * kAnnHidden + kAnnOutputs;
[[nodiscard]] std::vector<double> ann_flatten(const AnnModel& model);
void ann_unflatten(AnnModel& model, std::span<const double> params);

// Z-score statistics of the raw network inputs.
[[nodiscard]] std::array<FeatureNorm, kAnnInputs> ann_fit_norms(
    std::span<const FeatureVector> features);

// Mean over samples of sum_k (y_k - a3_k)^2 with one-hot targets; the gradient
// (flattened parameter order) is written when `gradient` is non-empty.
[[nodiscard]] double ann_loss(const AnnModel& model, std::span<const FeatureVector> features,
                              std::span<double> gradient = {});

struct AnnSchedule {
  double learning_rate = 0.05;
  std::size_t max_epochs = 5000;
  double min_improvement = 1e-8;
  bool fit_norms = true;
};

enum class StopReason { kEpochCap, kConverged, kLossIncrease };

struct AnnTrainResult {
  AnnModel model;
  // Loss of the initial model followed by the loss after each accepted update.
  std::vector<double> loss_history;
  std::size_t epochs = 0;
  // kLossIncrease: the last step raised the loss and was rolled back.
  StopReason stop = StopReason::kEpochCap;
};

// Full-batch gradient descent. Throws TrainingError on fewer than two samples
// per class or a non-finite loss.
[[nodiscard]] AnnTrainResult ann_train(const AnnModel& model,
                                       std::span<const FeatureVector> features,
                                       const AnnSchedule& schedule = {});

// LOS iff a3[LOS] >= 0.5; score = a3[LOS].
[[nodiscard]] Verdict ann_decide(std::span<const double, kAnnOutputs> output) noexcept;
[[nodiscard]] Verdict ann_classify(const AnnModel& model, const FeatureVector& fv) noexcept;

// ---------------------------------------------------------------------------

struct ErrorRates {
  double type_i = 0.0;   // P(decide NLOS | LOS)
  double type_ii = 0.0;  // P(decide LOS | NLOS)
  std::size_t n_los = 0;
  std::size_t n_nlos = 0;
  std::size_t n_type_i = 0;
  std::size_t n_type_ii = 0;
};

// Throws EvaluationError on length mismatch or a missing truth class.
[[nodiscard]] ErrorRates error_rates(std::span<const PathKind> decisions,
                                     std::span<const PathKind> truths);
[[nodiscard]] ErrorRates error_rates(std::span<const Verdict> verdicts,
                                     std::span<const PathKind> truths);

}  // namespace nlosid
