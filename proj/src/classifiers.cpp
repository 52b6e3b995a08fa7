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

#include "nlosid/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nlosid/error.hpp"
#include "nlosid/random.hpp"

namespace nlosid {
namespace {

std::size_t class_index(PathKind k) noexcept { return k == PathKind::kLos ? 0 : 1; }

std::array<double, kAnnOutputs> one_hot(PathKind k) noexcept {
  return k == PathKind::kLos ? std::array<double, kAnnOutputs>{1.0, 0.0}
                             : std::array<double, kAnnOutputs>{0.0, 1.0};
}

void count_classes(std::span<const FeatureVector> features, std::size_t& los, std::size_t& nlos) {
  los = nlos = 0;
  for (const auto& fv : features) {
    if (!fv.label) continue;
    (*fv.label == PathKind::kLos ? los : nlos) += 1;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// MLR

MlrModel mlr_train(std::span<const FeatureVector> features, std::size_t min_class_samples) {
  MlrModel model;
  GevFitOptions opts;
  opts.min_samples = min_class_samples;
  for (Metric m : kAllMetrics) {
    std::array<std::vector<double>, 2> samples;
    for (const auto& fv : features) {
      if (fv.label) samples[class_index(*fv.label)].push_back(fv.get(m));
    }
    for (PathKind kind : {PathKind::kLos, PathKind::kNlos}) {
      const auto& s = samples[class_index(kind)];
      const std::string where =
          "class " + std::string(to_string(kind)) + ", metric " + std::string(metric_name(m));
      if (s.size() < min_class_samples) {
        throw TrainingError(where + ": " + std::to_string(s.size()) + " samples, need " +
                            std::to_string(min_class_samples));
      }
      try {
        const GevParams p = gev_fit_mle(s, opts).params;
        (kind == PathKind::kLos ? model.at(m).los : model.at(m).nlos) = p;
      } catch (const FitError& e) {
        throw TrainingError(where + ": " + e.what());
      }
    }
  }
  return model;
}

Verdict mlr_classify(const MlrModel& model, const FeatureVector& fv,
                     std::span<const Metric> subset) {
  if (subset.empty()) throw ConfigError("MLR needs a non-empty metric subset");
  Verdict v;
  double score = 0.0;
  for (Metric m : subset) {
    const double x = fv.get(m);
    const double lp_los = gev_logpdf(x, model.at(m).los);
    const double lp_nlos = gev_logpdf(x, model.at(m).nlos);
    const bool los_out = !std::isfinite(lp_los);
    const bool nlos_out = !std::isfinite(lp_nlos);
    if (los_out && nlos_out) {
      v.decision = PathKind::kNlos;
      v.score = -std::numeric_limits<double>::infinity();
      v.support_violation = true;
      return v;
    }
    v.support_violation = v.support_violation || los_out || nlos_out;
    score += std::max(lp_los, kLogDensityFloor) - std::max(lp_nlos, kLogDensityFloor);
  }
  v.score = score;
  v.decision = score >= 0.0 ? PathKind::kLos : PathKind::kNlos;
  return v;
}

// ---------------------------------------------------------------------------
// ANN

double tansig(double x) noexcept { return 2.0 / (1.0 + std::exp(-2.0 * x)) - 1.0; }

AnnModel ann_init(std::uint64_t seed) {
  AnnModel m;
  Rng rng(seed);
  auto fill = [&](auto& w, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : w) v = rng.uniform(-limit, limit);
  };
  fill(m.iw, kAnnInputs, kAnnHidden);
  fill(m.lw21, kAnnHidden, kAnnHidden);
  fill(m.lw32, kAnnHidden, kAnnOutputs);
  return m;
}

std::array<double, kAnnInputs> ann_raw_inputs(const FeatureVector& fv) noexcept {
  std::array<double, kAnnInputs> x{};
  for (std::size_t i = 0; i < kAnnInputs; ++i) x[i] = fv.get(kAnnInputOrder[i]);
  return x;
}

AnnActivations ann_forward(const AnnModel& model,
                           std::span<const double, kAnnInputs> raw_input) noexcept {
  AnnActivations a;
  for (std::size_t i = 0; i < kAnnInputs; ++i) {
    a.input[i] = (raw_input[i] - model.feature_norms[i].mean) / model.feature_norms[i].scale;
  }
  for (std::size_t h = 0; h < kAnnHidden; ++h) {
    double s = model.b1[h];
    for (std::size_t i = 0; i < kAnnInputs; ++i) s += model.iw[h * kAnnInputs + i] * a.input[i];
    a.hidden1[h] = tansig(s);
  }
  for (std::size_t h = 0; h < kAnnHidden; ++h) {
    double s = model.b2[h];
    for (std::size_t i = 0; i < kAnnHidden; ++i) s += model.lw21[h * kAnnHidden + i] * a.hidden1[i];
    a.hidden2[h] = tansig(s);
  }
  std::array<double, kAnnOutputs> logits{};
  for (std::size_t o = 0; o < kAnnOutputs; ++o) {
    double s = model.b3[o];
    for (std::size_t i = 0; i < kAnnHidden; ++i) s += model.lw32[o * kAnnHidden + i] * a.hidden2[i];
    logits[o] = s;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t o = 0; o < kAnnOutputs; ++o) {
    a.output[o] = std::exp(logits[o] - top);
    sum += a.output[o];
  }
  for (double& v : a.output) v /= sum;
  return a;
}

AnnActivations ann_forward(const AnnModel& model, const FeatureVector& fv) noexcept {
  const auto x = ann_raw_inputs(fv);
  return ann_forward(model, std::span<const double, kAnnInputs>(x));
}

std::vector<double> ann_flatten(const AnnModel& model) {
  std::vector<double> p;
  p.reserve(kAnnParamCount);
  p.insert(p.end(), model.iw.begin(), model.iw.end());
  p.insert(p.end(), model.b1.begin(), model.b1.end());
  p.insert(p.end(), model.lw21.begin(), model.lw21.end());
  p.insert(p.end(), model.b2.begin(), model.b2.end());
  p.insert(p.end(), model.lw32.begin(), model.lw32.end());
  p.insert(p.end(), model.b3.begin(), model.b3.end());
  return p;
}

void ann_unflatten(AnnModel& model, std::span<const double> params) {
  if (params.size() != kAnnParamCount) throw DataError("ANN parameter vector has the wrong size");
  auto it = params.begin();
  auto take = [&](auto& dst) {
    std::copy(it, it + static_cast<long>(dst.size()), dst.begin());
    it += static_cast<long>(dst.size());
  };
  take(model.iw);
  take(model.b1);
  take(model.lw21);
  take(model.b2);
  take(model.lw32);
  take(model.b3);
}

std::array<FeatureNorm, kAnnInputs> ann_fit_norms(std::span<const FeatureVector> features) {
  std::array<FeatureNorm, kAnnInputs> norms{};
  if (features.empty()) return norms;
  const double n = static_cast<double>(features.size());
  for (std::size_t i = 0; i < kAnnInputs; ++i) {
    const Metric m = kAnnInputOrder[i];
    double mean = 0.0;
    for (const auto& fv : features) mean += fv.get(m);
    mean /= n;
    double var = 0.0;
    for (const auto& fv : features) var += (fv.get(m) - mean) * (fv.get(m) - mean);
    const double sd = std::sqrt(var / n);
    norms[i] = {mean, sd > 0.0 && std::isfinite(sd) ? sd : 1.0};
  }
  return norms;
}

double ann_loss(const AnnModel& model, std::span<const FeatureVector> features,
                std::span<double> gradient) {
  const bool want_grad = !gradient.empty();
  if (want_grad) {
    if (gradient.size() != kAnnParamCount) throw DataError("gradient buffer has the wrong size");
    std::fill(gradient.begin(), gradient.end(), 0.0);
  }
  constexpr std::size_t kOffB1 = kAnnHidden * kAnnInputs;
  constexpr std::size_t kOffLw21 = kOffB1 + kAnnHidden;
  constexpr std::size_t kOffB2 = kOffLw21 + kAnnHidden * kAnnHidden;
  constexpr std::size_t kOffLw32 = kOffB2 + kAnnHidden;
  constexpr std::size_t kOffB3 = kOffLw32 + kAnnOutputs * kAnnHidden;

  std::size_t used = 0;
  double loss = 0.0;
  for (const auto& fv : features) {
    if (!fv.label) continue;
    ++used;
  }
  if (used == 0) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(used);

  for (const auto& fv : features) {
    if (!fv.label) continue;
    const AnnActivations a = ann_forward(model, fv);
    const auto y = one_hot(*fv.label);
    std::array<double, kAnnOutputs> g_out{};
    for (std::size_t o = 0; o < kAnnOutputs; ++o) {
      const double e = a.output[o] - y[o];
      loss += e * e * inv_n;
      g_out[o] = 2.0 * e * inv_n;
    }
    if (!want_grad) continue;

    // Softmax Jacobian: dL/dz_j = a_j (g_j - sum_k g_k a_k).
    double dot = 0.0;
    for (std::size_t o = 0; o < kAnnOutputs; ++o) dot += g_out[o] * a.output[o];
    std::array<double, kAnnOutputs> d3{};
    for (std::size_t o = 0; o < kAnnOutputs; ++o) d3[o] = a.output[o] * (g_out[o] - dot);

    std::array<double, kAnnHidden> d2{};
    for (std::size_t o = 0; o < kAnnOutputs; ++o) {
      gradient[kOffB3 + o] += d3[o];
      for (std::size_t h = 0; h < kAnnHidden; ++h) {
        gradient[kOffLw32 + o * kAnnHidden + h] += d3[o] * a.hidden2[h];
        d2[h] += model.lw32[o * kAnnHidden + h] * d3[o];
      }
    }
    for (std::size_t h = 0; h < kAnnHidden; ++h) d2[h] *= 1.0 - a.hidden2[h] * a.hidden2[h];

    std::array<double, kAnnHidden> d1{};
    for (std::size_t h = 0; h < kAnnHidden; ++h) {
      gradient[kOffB2 + h] += d2[h];
      for (std::size_t i = 0; i < kAnnHidden; ++i) {
        gradient[kOffLw21 + h * kAnnHidden + i] += d2[h] * a.hidden1[i];
        d1[i] += model.lw21[h * kAnnHidden + i] * d2[h];
      }
    }
    for (std::size_t h = 0; h < kAnnHidden; ++h) d1[h] *= 1.0 - a.hidden1[h] * a.hidden1[h];

    for (std::size_t h = 0; h < kAnnHidden; ++h) {
      gradient[kOffB1 + h] += d1[h];
      for (std::size_t i = 0; i < kAnnInputs; ++i) {
        gradient[h * kAnnInputs + i] += d1[h] * a.input[i];
      }
    }
  }
  return loss;
}

AnnTrainResult ann_train(const AnnModel& model, std::span<const FeatureVector> features,
                         const AnnSchedule& schedule) {
  std::size_t n_los = 0, n_nlos = 0;
  count_classes(features, n_los, n_nlos);
  if (n_los < 2 || n_nlos < 2) {
    throw TrainingError("ANN training needs at least 2 samples per class (LOS " +
                        std::to_string(n_los) + ", NLOS " + std::to_string(n_nlos) + ")");
  }
  AnnTrainResult result;
  result.model = model;
  if (schedule.fit_norms) result.model.feature_norms = ann_fit_norms(features);

  std::vector<double> params = ann_flatten(result.model);
  std::vector<double> grad(kAnnParamCount);
  std::vector<double> next_grad(kAnnParamCount);
  std::vector<double> candidate(kAnnParamCount);
  AnnModel trial = result.model;

  double loss = ann_loss(result.model, features, grad);
  if (!std::isfinite(loss)) throw TrainingError("ANN initial loss is not finite");
  result.loss_history.push_back(loss);

  result.stop = StopReason::kEpochCap;
  for (std::size_t epoch = 0; epoch < schedule.max_epochs; ++epoch) {
    for (std::size_t k = 0; k < kAnnParamCount; ++k) {
      candidate[k] = params[k] - schedule.learning_rate * grad[k];
    }
    ann_unflatten(trial, candidate);
    const double next = ann_loss(trial, features, next_grad);
    if (!std::isfinite(next)) {
      throw TrainingError("ANN loss became non-finite at epoch " + std::to_string(epoch + 1));
    }
    if (next > loss) {
      result.stop = StopReason::kLossIncrease;
      break;
    }
    params.swap(candidate);
    grad.swap(next_grad);
    result.loss_history.push_back(next);
    result.epochs = epoch + 1;
    const double improvement = loss - next;
    loss = next;
    if (improvement < schedule.min_improvement) {
      result.stop = StopReason::kConverged;
      break;
    }
  }
  ann_unflatten(result.model, params);
  return result;
}

Verdict ann_decide(std::span<const double, kAnnOutputs> output) noexcept {
  Verdict v;
  v.score = output[0];
  v.decision = output[0] >= 0.5 ? PathKind::kLos : PathKind::kNlos;
  return v;
}

Verdict ann_classify(const AnnModel& model, const FeatureVector& fv) noexcept {
  const AnnActivations a = ann_forward(model, fv);
  return ann_decide(std::span<const double, kAnnOutputs>(a.output));
}

// ---------------------------------------------------------------------------

ErrorRates error_rates(std::span<const PathKind> decisions, std::span<const PathKind> truths) {
  if (decisions.size() != truths.size()) {
    throw EvaluationError("decision and truth sequences differ in length (" +
                          std::to_string(decisions.size()) + " vs " +
                          std::to_string(truths.size()) + ")");
  }
  ErrorRates r;
  for (std::size_t k = 0; k < truths.size(); ++k) {
    if (truths[k] == PathKind::kLos) {
      ++r.n_los;
      if (decisions[k] == PathKind::kNlos) ++r.n_type_i;
    } else {
      ++r.n_nlos;
      if (decisions[k] == PathKind::kLos) ++r.n_type_ii;
    }
  }
  if (r.n_los == 0 || r.n_nlos == 0) {
    throw EvaluationError("error rates need at least one LOS and one NLOS sample (LOS " +
                          std::to_string(r.n_los) + ", NLOS " + std::to_string(r.n_nlos) + ")");
  }
  r.type_i = static_cast<double>(r.n_type_i) / static_cast<double>(r.n_los);
  r.type_ii = static_cast<double>(r.n_type_ii) / static_cast<double>(r.n_nlos);
  return r;
}

ErrorRates error_rates(std::span<const Verdict> verdicts, std::span<const PathKind> truths) {
  std::vector<PathKind> d(verdicts.size());
  for (std::size_t k = 0; k < verdicts.size(); ++k) d[k] = verdicts[k].decision;
  return error_rates(d, truths);
}

}  // namespace nlosid
