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

#include "nlosid/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "nlosid/error.hpp"
#include "nlosid/gev.hpp"
#include "nlosid/random.hpp"

namespace nlosid {
namespace {

namespace fs = std::filesystem;

// Stream tags for derived seeds; far above any realization index.
constexpr std::uint64_t kAnnSeedTag = 0xA22A22A22ull;
constexpr std::uint64_t kBootstrapSeedTag = 0xB007B007ull;

std::string_view mode_name(ExperimentMode m) {
  return m == ExperimentMode::kSimulate ? "simulate" : "measured";
}

std::string class_name(std::size_t c) { return c == 0 ? "LOS" : "NLOS"; }

// Rethrows the active exception as the same error category with `prefix`
// prepended, so exit codes survive the added context.
[[noreturn]] void rethrow_with(std::exception_ptr ep, const std::string& prefix) {
  try {
    std::rethrow_exception(ep);
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const FormatError& e) {
    throw FormatError(prefix + e.what());
  } catch (const RenderError& e) {
    throw RenderError(prefix + e.what());
  } catch (const EvaluationError& e) {
    throw EvaluationError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const DegenerateError& e) {
    throw DegenerateError(prefix + e.what());
  } catch (const FitError& e) {
    throw FitError(prefix + e.what());
  } catch (const TrainingError& e) {
    throw TrainingError(prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  } catch (const fs::filesystem_error& e) {
    throw DataError(prefix + e.what());
  }
}

template <typename Fn>
auto with_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (...) {
    rethrow_with(std::current_exception(), stage + ": ");
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> class_values(std::span<const FeatureVector> fvs, Metric m, PathKind k) {
  std::vector<double> out;
  for (const auto& f : fvs) {
    if (f.label == k) out.push_back(f.get(m));
  }
  return out;
}

std::vector<FeatureVector> vectors_of(std::span<const FeatureRow> rows) {
  std::vector<FeatureVector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.features);
  return out;
}

Json error_row_json(const ErrorRow& r) {
  std::vector<std::string> names;
  for (Metric m : r.metrics) names.emplace_back(metric_name(m));
  return Json{{"row", r.name},
              {"classifier", r.classifier},
              {"metrics", names},
              {"type_i", r.rates.type_i},
              {"type_ii", r.rates.type_ii},
              {"n_los", r.rates.n_los},
              {"n_nlos", r.rates.n_nlos},
              {"n_type_i", r.rates.n_type_i},
              {"n_type_ii", r.rates.n_type_ii}};
}

Json gev_table_json(const GevTable& t) {
  Json out = Json::object();
  for (Metric m : kAllMetrics) {
    Json entry = Json::object();
    for (std::size_t c = 0; c < 2; ++c) {
      const auto& e = t[static_cast<std::size_t>(m)][c];
      entry[class_name(c)] = Json{{"gamma", e.params.gamma}, {"mu", e.params.mu},
                                  {"sigma", e.params.sigma}, {"rmse", e.rmse}, {"n", e.n}};
    }
    out[std::string(metric_name(m))] = entry;
  }
  return out;
}

GevTable gev_table_for(const MlrModel& model, std::span<const FeatureVector> train) {
  GevTable t{};
  for (Metric m : kAllMetrics) {
    for (std::size_t c = 0; c < 2; ++c) {
      const PathKind k = c == 0 ? PathKind::kLos : PathKind::kNlos;
      const auto values = class_values(train, m, k);
      auto& e = t[static_cast<std::size_t>(m)][c];
      e.params = c == 0 ? model.at(m).los : model.at(m).nlos;
      e.n = values.size();
      e.rmse = cdf_rmse(values, e.params);
    }
  }
  return t;
}

std::string verdicts_csv(const std::vector<VerdictLogEntry>& log) {
  std::string out = "row,sample,truth,decision,score,support_violation\n";
  for (const auto& v : log) {
    out += v.row + ',' + std::to_string(v.sample) + ',' + std::string(to_string(v.truth)) + ',' +
           std::string(to_string(v.verdict.decision)) + ',' + format_double(v.verdict.score) + ',' +
           (v.verdict.support_violation ? "1" : "0") + '\n';
  }
  return out;
}

Json config_for_report(const ExperimentConfig& c) {
  Json j = c;
  j.erase("output_dir");
  j.erase("threads");
  return j;
}

void check_unknown_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) ==
        allowed.end()) {
      throw ConfigError(std::string("unknown ") + what + " key '" + key + "'");
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  sim.validate();
  if (seg) seg->validate();
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (mode == ExperimentMode::kSimulate) {
    if (n_train < 1 || n_test < 1) throw ConfigError("n_train and n_test must be positive");
    if (n_train + n_test > n_realizations) {
      throw ConfigError("n_train + n_test (" + std::to_string(n_train + n_test) +
                        ") exceeds n_realizations (" + std::to_string(n_realizations) + ")");
    }
  } else {
    if (measured_features.empty()) throw ConfigError("measured mode needs measured_features");
    if (bootstrap.n_train < 1 || bootstrap.n_test < 1 || bootstrap.repeats < 1) {
      throw ConfigError("bootstrap sizes and repeats must be positive");
    }
  }
  if (min_class_samples && *min_class_samples < 2) {
    throw ConfigError("min_class_samples must be at least 2");
  }
}

SegParams ExperimentConfig::seg_params() const {
  return seg ? *seg : SegParams::for_grid(sim.step_deg, std::min(sim.hpbw_az_deg, sim.hpbw_el_deg));
}

std::size_t ExperimentConfig::class_min() const {
  if (min_class_samples) return *min_class_samples;
  return mode == ExperimentMode::kSimulate ? 20 : 5;
}

void to_json(Json& j, const ExperimentConfig& c) {
  j = Json{{"mode", mode_name(c.mode)},
           {"sim", c.sim},
           {"metric", c.metric},
           {"n_realizations", c.n_realizations},
           {"n_train", c.n_train},
           {"n_test", c.n_test},
           {"bootstrap",
            {{"n_train", c.bootstrap.n_train},
             {"n_test", c.bootstrap.n_test},
             {"repeats", c.bootstrap.repeats}}},
           {"measured_features", c.measured_features.generic_string()},
           {"ann", c.ann},
           {"seed", c.seed},
           {"threads", c.threads},
           {"output_dir", c.output_dir.generic_string()},
           {"write_curves", c.write_curves}};
  j["seg"] = c.seg ? Json(*c.seg) : Json(nullptr);
  j["min_class_samples"] = c.min_class_samples ? Json(*c.min_class_samples) : Json(nullptr);
}

ExperimentConfig experiment_config_from_json(const Json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  check_unknown_keys(j,
                     {"mode", "sim", "seg", "metric", "n_realizations", "n_train", "n_test",
                      "bootstrap", "measured_features", "ann", "min_class_samples", "seed",
                      "threads", "output_dir", "write_curves"},
                     "experiment config");
  ExperimentConfig c;
  auto get = [&](const char* key, auto& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
      out = j.at(key).get<std::remove_reference_t<decltype(out)>>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
  };
  std::string mode = "simulate";
  get("mode", mode);
  if (mode == "simulate") {
    c.mode = ExperimentMode::kSimulate;
  } else if (mode == "measured") {
    c.mode = ExperimentMode::kMeasured;
  } else {
    throw ConfigError("mode must be 'simulate' or 'measured'");
  }
  if (j.contains("sim")) c.sim = j.at("sim").get<SimConfig>();
  if (j.contains("seg") && !j.at("seg").is_null()) c.seg = j.at("seg").get<SegParams>();
  if (j.contains("metric")) c.metric = j.at("metric").get<MetricConfig>();
  if (j.contains("ann")) c.ann = j.at("ann").get<AnnSchedule>();
  get("n_realizations", c.n_realizations);
  get("n_train", c.n_train);
  get("n_test", c.n_test);
  if (j.contains("bootstrap")) {
    const Json& b = j.at("bootstrap");
    if (!b.is_object()) throw ConfigError("bootstrap must be an object");
    check_unknown_keys(b, {"n_train", "n_test", "repeats"}, "bootstrap");
    try {
      c.bootstrap.n_train = b.value("n_train", c.bootstrap.n_train);
      c.bootstrap.n_test = b.value("n_test", c.bootstrap.n_test);
      c.bootstrap.repeats = b.value("repeats", c.bootstrap.repeats);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bootstrap: ") + e.what());
    }
  }
  std::string features;
  get("measured_features", features);
  if (!features.empty()) {
    fs::path p(features);
    c.measured_features = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  std::size_t min_class = 0;
  if (j.contains("min_class_samples") && !j.at("min_class_samples").is_null()) {
    get("min_class_samples", min_class);
    c.min_class_samples = min_class;
  }
  get("seed", c.seed);
  get("threads", c.threads);
  std::string out;
  get("output_dir", out);
  c.output_dir = out;
  get("write_curves", c.write_curves);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Pipeline stages

SimulatedRealization simulate_realization(const SimConfig& base, std::uint64_t master_seed,
                                          std::size_t index) {
  SimulatedRealization r;
  r.index = index;
  r.config = base;
  r.config.seed = derive_seed(master_seed, index);
  r.channel = generate_channel(r.config);
  r.cir = render_cir(r.channel.clusters, r.config);
  r.cir.quantize_to_c64();
  return r;
}

ExtractionResult extract_features(const CirTensor& cir, const SegParams& seg,
                                  const MetricConfig& metric,
                                  const std::optional<GroundTruth>& truth, long realization) {
  ExtractionResult out;
  const PasMap pas = compute_pas(cir);
  out.clusters = segment(pas, seg);
  out.clusters_found = out.clusters.size();
  if (truth) {
    out.los_present = truth->los_present;
    out.los_missed = label_clusters_with_truth(out.clusters, cir.grid(), *truth).los_missed;
  }
  for (const Cluster& c : out.clusters) {
    try {
      FeatureRow row;
      row.features = cluster_features(c, cir, pas, metric);
      row.features.label = c.truth;
      row.realization = realization;
      row.cluster_id = c.id;
      out.rows.push_back(row);
    } catch (const DegenerateError& e) {
      out.skipped.push_back({realization, c.id, e.what()});
    }
  }
  return out;
}

CirTensor ingest_sweeps(const std::vector<SweepSample>& samples,
                        const std::optional<AngularGrid>& grid_in, Window window) {
  if (samples.empty()) throw DataError("no sweep samples to ingest");

  AngularGrid grid;
  if (grid_in) {
    grid = *grid_in;
    grid.validate();
  } else {
    auto axis = [](std::vector<double> v, const char* name, double& start, double& step,
                   std::size_t& n) {
      std::sort(v.begin(), v.end());
      std::vector<double> u;
      for (double x : v) {
        if (u.empty() || std::abs(x - u.back()) > 1e-9 * std::max(1.0, std::abs(x))) u.push_back(x);
      }
      start = u.front();
      n = u.size();
      step = n > 1 ? (u.back() - u.front()) / static_cast<double>(n - 1) : 1.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(u[k] - (start + static_cast<double>(k) * step)) > 1e-6 * step) {
          throw FormatError(std::string("sweep ") + name + " values are not uniformly spaced");
        }
      }
    };
    std::vector<double> az, el;
    for (const auto& s : samples) {
      az.push_back(s.az_deg);
      el.push_back(s.el_deg);
    }
    axis(az, "azimuth", grid.az_start, grid.az_step, grid.n_az);
    axis(el, "elevation", grid.el_start, grid.el_step, grid.n_el);
  }

  // Exact column lookup: a grid listing both -180 and +180 keeps them apart.
  auto locate = [&](double az, double el) -> std::optional<PixelIndex> {
    const double fi = (el - grid.el_start) / grid.el_step;
    const long i = std::lround(fi);
    if (i < 0 || i >= static_cast<long>(grid.n_el) || std::abs(fi - static_cast<double>(i)) > 1e-6) {
      return std::nullopt;
    }
    for (double shift : {0.0, 360.0, -360.0}) {
      const double fj = (az + shift - grid.az_start) / grid.az_step;
      const long j = std::lround(fj);
      if (j >= 0 && j < static_cast<long>(grid.n_az) && std::abs(fj - static_cast<double>(j)) <= 1e-6) {
        return PixelIndex{static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
      }
    }
    return std::nullopt;
  };

  std::vector<std::vector<std::pair<double, Complex>>> per_pixel(grid.size());
  for (const auto& s : samples) {
    const auto p = locate(s.az_deg, s.el_deg);
    if (!p) {
      throw DataError("sweep direction (az " + format_double(s.az_deg) + ", el " +
                      format_double(s.el_deg) + ") is not on the grid");
    }
    per_pixel[grid.flat(*p)].emplace_back(s.freq_ghz, s.value);
  }

  std::vector<std::string> missing;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (per_pixel[k].empty()) {
      const PixelIndex p = grid.unflat(k);
      missing.push_back("(" + format_double(grid.az_deg(p.az)) + ", " +
                        format_double(grid.el_deg(p.el)) + ")");
    }
  }
  if (!missing.empty()) {
    std::string msg = "sweeps missing " + std::to_string(missing.size()) + " direction(s) (az, el):";
    for (std::size_t k = 0; k < std::min<std::size_t>(missing.size(), 20); ++k) msg += " " + missing[k];
    if (missing.size() > 20) msg += " ...";
    throw DataError(msg);
  }

  CirTensor cir;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    auto& pts = per_pixel[k];
    std::stable_sort(pts.begin(), pts.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<double> f;
    std::vector<Complex> v;
    for (const auto& [fq, val] : pts) {
      f.push_back(fq);
      v.push_back(val);
    }
    const CirSlice slice = cir_from_cfr(make_cfr_slice(f, v), window);
    if (k == 0) {
      cir = CirTensor(grid, slice.sample_rate_ghz, slice.taps.size());
    } else if (slice.taps.size() != cir.n_taps() ||
               std::abs(slice.sample_rate_ghz - cir.sample_rate_ghz()) >
                   1e-9 * cir.sample_rate_ghz()) {
      const PixelIndex p = grid.unflat(k);
      throw FormatError("sweep at (az " + format_double(grid.az_deg(p.az)) + ", el " +
                        format_double(grid.el_deg(p.el)) + ") uses a different frequency grid");
    }
    const PixelIndex p = grid.unflat(k);
    std::copy(slice.taps.begin(), slice.taps.end(), cir.pixel(p.el, p.az).begin());
  }
  return cir;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& task) {
  if (n == 0) return;
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  // Report the lowest failing index so failures are thread-count independent.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// Evaluation

const std::vector<std::string>& error_row_names() {
  static const std::vector<std::string> names{"r_p",     "k_t",       "k_f", "tau_mean",
                                              "tau_rms", "joint-MLR", "ANN"};
  return names;
}

Evaluation train_and_evaluate(std::span<const FeatureVector> train,
                              std::span<const FeatureVector> test, std::size_t min_class_samples,
                              const AnnSchedule& schedule, std::uint64_t ann_seed) {
  for (const auto& f : test) {
    if (!f.label) throw EvaluationError("test sample without a LOS/NLOS label");
  }
  Evaluation ev;
  ev.mlr = with_stage("mlr_train", [&] { return mlr_train(train, min_class_samples); });
  ev.gev = gev_table_for(ev.mlr, train);
  const AnnTrainResult trained =
      with_stage("ann_train", [&] { return ann_train(ann_init(ann_seed), train, schedule); });
  ev.ann = trained.model;
  ev.ann_loss_history = trained.loss_history;

  std::vector<PathKind> truths;
  for (const auto& f : test) truths.push_back(*f.label);

  auto add_row = [&](const std::string& name, const std::string& classifier,
                     std::vector<Metric> metrics, const std::vector<Verdict>& verdicts) {
    for (std::size_t s = 0; s < verdicts.size(); ++s) {
      ev.verdicts.push_back({name, s, truths[s], verdicts[s]});
    }
    ev.errors.push_back({name, classifier, std::move(metrics),
                         with_stage("evaluate " + name, [&] { return error_rates(verdicts, truths); })});
  };

  for (Metric m : kAllMetrics) {
    const std::array<Metric, 1> subset{m};
    std::vector<Verdict> v;
    for (const auto& f : test) v.push_back(mlr_classify(ev.mlr, f, subset));
    add_row(std::string(metric_name(m)), "MLR", {m}, v);
  }
  {
    std::vector<Verdict> v;
    for (const auto& f : test) v.push_back(mlr_classify(ev.mlr, f, kAllMetrics));
    add_row("joint-MLR", "MLR", {kAllMetrics.begin(), kAllMetrics.end()}, v);
  }
  {
    std::vector<Verdict> v;
    for (const auto& f : test) v.push_back(ann_classify(ev.ann, f));
    add_row("ANN", "ANN", {kAnnInputOrder.begin(), kAnnInputOrder.end()}, v);
  }
  return ev;
}

std::string curve_csv(std::span<const double> samples, const GevParams& fit, std::size_t bins) {
  std::string out = "x,empirical_pdf,fitted_pdf,empirical_cdf,fitted_cdf\n";
  if (samples.empty() || bins == 0) return out;
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  double lo = s.front();
  double hi = s.back();
  if (!(hi > lo)) {
    const double pad = std::max(1e-12, 0.5 * std::abs(lo));
    lo -= pad;
    hi += pad;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  const double n = static_cast<double>(s.size());
  std::vector<std::size_t> counts(bins, 0);
  for (double x : s) {
    auto b = static_cast<std::size_t>((x - lo) / width);
    counts[std::min(b, bins - 1)]++;
  }
  for (std::size_t b = 0; b < bins; ++b) {
    const double x = lo + (static_cast<double>(b) + 0.5) * width;
    const auto below = static_cast<double>(std::upper_bound(s.begin(), s.end(), x) - s.begin());
    out += format_double(x) + ',' + format_double(static_cast<double>(counts[b]) / (n * width)) + ',' +
           format_double(gev_pdf(x, fit)) + ',' + format_double(below / n) + ',' +
           format_double(gev_cdf(x, fit)) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reporting

Json report_to_json(const Report& r) {
  Json errors = Json::array();
  for (const auto& e : r.errors) errors.push_back(error_row_json(e));

  Json medians = Json::object();
  for (Metric m : kAllMetrics) {
    const auto& md = r.medians[static_cast<std::size_t>(m)];
    medians[std::string(metric_name(m))] = Json{{"LOS", md[0]}, {"NLOS", md[1]}};
  }

  Json diags = Json::array();
  for (const auto& d : r.realizations) {
    diags.push_back({{"index", d.index},
                     {"clusters_found", d.clusters_found},
                     {"features", d.features},
                     {"skipped", d.skipped},
                     {"los_present", d.los_present},
                     {"los_recovered", d.los_recovered},
                     {"split", d.train ? "train" : "test"}});
  }

  Json skipped = Json::array();
  for (const auto& s : r.skipped) {
    skipped.push_back({{"realization", s.realization}, {"cluster_id", s.cluster_id}, {"reason", s.reason}});
  }

  Json j{{"mode", mode_name(r.mode)},
         {"seed", r.seed},
         {"gev_table", gev_table_json(r.gev)},
         {"error_table", errors},
         {"medians", medians},
         {"realizations", diags},
         {"skipped_clusters", skipped},
         {"counts",
          {{"train_features", r.n_train_features},
           {"test_features", r.n_test_features},
           {"skipped_clusters", r.skipped.size()}}},
         {"curve_files", r.curve_files}};
  if (r.mode == ExperimentMode::kMeasured) {
    Json reps = Json::array();
    for (const auto& rep : r.bootstrap_repeats) {
      Json rows = Json::array();
      for (const auto& e : rep) rows.push_back(error_row_json(e));
      reps.push_back(rows);
    }
    j["bootstrap_repeats"] = reps;
    Json parts = Json::array();
    for (const auto& p : r.bootstrap_partitions) parts.push_back({{"train", p.train}, {"test", p.test}});
    j["bootstrap_partitions"] = parts;
  }
  return j;
}

std::string render_report_text(const Json& report) {
  std::string out;
  char line[256];
  auto num = [](const Json& v) { return v.is_number() ? v.get<double>() : std::nan(""); };
  try {
    out += "mode: " + report.at("mode").get<std::string>() +
           "   seed: " + std::to_string(report.at("seed").get<std::uint64_t>()) + "\n\n";
    out += "GEV fits (training set)\n";
    std::snprintf(line, sizeof line, "%-10s %-5s %12s %14s %14s %10s %6s\n", "metric", "class",
                  "gamma", "mu", "sigma", "rmse", "n");
    out += line;
    for (const auto& [metric, classes] : report.at("gev_table").items()) {
      for (const char* c : {"LOS", "NLOS"}) {
        const Json& e = classes.at(c);
        std::snprintf(line, sizeof line, "%-10s %-5s %12.5g %14.6g %14.6g %10.4f %6zu\n",
                      metric.c_str(), c, num(e.at("gamma")), num(e.at("mu")), num(e.at("sigma")),
                      num(e.at("rmse")), e.at("n").get<std::size_t>());
        out += line;
      }
    }
    out += "\nError probabilities (test set)\n";
    std::snprintf(line, sizeof line, "%-10s %-4s %8s %8s\n", "row", "clf", "type I", "type II");
    out += line;
    for (const auto& e : report.at("error_table")) {
      std::snprintf(line, sizeof line, "%-10s %-4s %8.4f %8.4f\n",
                    e.at("row").get<std::string>().c_str(), e.at("classifier").get<std::string>().c_str(),
                    num(e.at("type_i")), num(e.at("type_ii")));
      out += line;
    }
    out += "\nMedians by class\n";
    for (const auto& [metric, m] : report.at("medians").items()) {
      std::snprintf(line, sizeof line, "%-10s LOS %12.6g   NLOS %12.6g\n", metric.c_str(),
                    num(m.at("LOS")), num(m.at("NLOS")));
      out += line;
    }
    const Json& counts = report.at("counts");
    out += "\ntrain features: " + std::to_string(counts.at("train_features").get<std::size_t>()) +
           ", test features: " + std::to_string(counts.at("test_features").get<std::size_t>()) +
           ", skipped clusters: " + std::to_string(counts.at("skipped_clusters").get<std::size_t>()) +
           "\n";
    if (report.contains("realizations") && !report.at("realizations").empty()) {
      std::size_t los = 0, recovered = 0;
      for (const auto& d : report.at("realizations")) {
        if (d.at("los_present").get<bool>()) {
          ++los;
          if (d.at("los_recovered").get<bool>()) ++recovered;
        }
      }
      out += "LOS recovered in " + std::to_string(recovered) + " of " + std::to_string(los) +
             " realizations\n";
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report JSON: ") + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Entry points

namespace {

void fill_medians(Report& r, std::span<const FeatureVector> all) {
  for (Metric m : kAllMetrics) {
    r.medians[static_cast<std::size_t>(m)] = {median(class_values(all, m, PathKind::kLos)),
                                              median(class_values(all, m, PathKind::kNlos))};
  }
}

void write_outputs(const ExperimentConfig& config, ExperimentOutput& out,
                   std::span<const FeatureVector> curve_train) {
  if (config.output_dir.empty()) return;
  const fs::path dir = config.output_dir;
  with_stage("write outputs", [&] {
    fs::create_directories(dir);
    if (config.write_curves) {
      for (Metric m : kAllMetrics) {
        for (std::size_t c = 0; c < 2; ++c) {
          const PathKind k = c == 0 ? PathKind::kLos : PathKind::kNlos;
          const std::string name =
              "curves/" + std::string(metric_name(m)) + "_" + class_name(c) + ".csv";
          const auto values = class_values(curve_train, m, k);
          write_text_file(dir / name,
                          curve_csv(values, out.report.gev[static_cast<std::size_t>(m)][c].params));
          out.report.curve_files.push_back(name);
        }
      }
    }
    const Json report = report_to_json(out.report);
    write_json_file(dir / "report.json", report);
    write_text_file(dir / "report.txt", render_report_text(report));
    write_feature_csv(dir / "features.csv", out.features);
    write_text_file(dir / "verdicts.csv", verdicts_csv(out.verdicts));
    write_json_file(dir / "mlr_model.json", Json(out.evaluation.mlr));
    write_json_file(dir / "ann_model.json", Json(out.evaluation.ann));
    write_json_file(dir / "config.json", config_for_report(config));
    return 0;
  });
}

ExperimentOutput run_simulated(const ExperimentConfig& config) {
  const SegParams seg = config.seg_params();
  const std::size_t n = config.n_train + config.n_test;
  std::vector<ExtractionResult> results(n);
  parallel_for(n, config.threads, [&](std::size_t i) {
    const std::string where = "realization " + std::to_string(i);
    const auto sim = with_stage("simulate " + where,
                                [&] { return simulate_realization(config.sim, config.seed, i); });
    results[i] = with_stage("extract " + where, [&] {
      return extract_features(sim.cir, seg, config.metric, sim.channel.truth, static_cast<long>(i));
    });
  });

  ExperimentOutput out;
  Report& rep = out.report;
  rep.mode = config.mode;
  rep.seed = config.seed;
  std::vector<FeatureVector> train, test, all;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = results[i];
    const bool is_train = i < config.n_train;
    bool recovered = false;
    for (const auto& row : r.rows) {
      out.features.push_back(row);
      all.push_back(row.features);
      (is_train ? train : test).push_back(row.features);
      if (row.features.label == PathKind::kLos) recovered = true;
    }
    rep.skipped.insert(rep.skipped.end(), r.skipped.begin(), r.skipped.end());
    rep.realizations.push_back(
        {i, r.clusters_found, r.rows.size(), r.skipped.size(), r.los_present, recovered, is_train});
  }
  rep.n_train_features = train.size();
  rep.n_test_features = test.size();
  fill_medians(rep, all);

  out.evaluation = train_and_evaluate(train, test, config.class_min(), config.ann,
                                      derive_seed(config.seed, kAnnSeedTag));
  rep.gev = out.evaluation.gev;
  rep.errors = out.evaluation.errors;
  out.verdicts = out.evaluation.verdicts;
  write_outputs(config, out, train);
  return out;
}

ExperimentOutput run_measured(const ExperimentConfig& config) {
  ExperimentOutput out;
  out.features = with_stage("load measured features",
                            [&] { return read_feature_csv(config.measured_features); });
  for (const auto& r : out.features) {
    if (!r.features.label) throw DataError("measured feature rows must all carry a label");
  }
  const std::vector<FeatureVector> all = vectors_of(out.features);

  // Rows sharing a realization id come from one PAS sample and are resampled
  // together; otherwise every row is its own sample.
  std::vector<std::vector<std::size_t>> groups;
  {
    std::map<long, std::size_t> slot;
    for (std::size_t k = 0; k < out.features.size(); ++k) {
      const long id = out.features[k].realization;
      if (id < 0) {
        groups.push_back({k});
        continue;
      }
      auto [it, fresh] = slot.try_emplace(id, groups.size());
      if (fresh) groups.emplace_back();
      groups[it->second].push_back(k);
    }
  }
  const auto& b = config.bootstrap;
  if (b.n_train + b.n_test > groups.size()) {
    throw ConfigError("bootstrap needs " + std::to_string(b.n_train + b.n_test) +
                      " samples but the dataset has " + std::to_string(groups.size()));
  }
  const auto splits = bootstrap_split(groups.size(), b.n_train, b.n_test, b.repeats,
                                      derive_seed(config.seed, kBootstrapSeedTag));

  Report& rep = out.report;
  rep.mode = config.mode;
  rep.seed = config.seed;
  rep.bootstrap_partitions = splits;
  std::vector<double> sum_i(error_row_names().size(), 0.0), sum_ii(sum_i.size(), 0.0);
  std::vector<ErrorRow> totals;
  for (std::size_t r = 0; r < splits.size(); ++r) {
    std::vector<FeatureVector> train, test;
    for (std::size_t g : splits[r].train) {
      for (std::size_t k : groups[g]) train.push_back(all[k]);
    }
    for (std::size_t g : splits[r].test) {
      for (std::size_t k : groups[g]) test.push_back(all[k]);
    }
    Evaluation ev = with_stage("bootstrap repeat " + std::to_string(r), [&] {
      return train_and_evaluate(train, test, config.class_min(), config.ann,
                                derive_seed(derive_seed(config.seed, kAnnSeedTag), r));
    });
    if (totals.empty()) totals = ev.errors;
    for (std::size_t e = 0; e < ev.errors.size(); ++e) {
      const ErrorRates& x = ev.errors[e].rates;
      sum_i[e] += x.type_i;
      sum_ii[e] += x.type_ii;
      if (r > 0) {
        ErrorRates& t = totals[e].rates;
        t.n_los += x.n_los;
        t.n_nlos += x.n_nlos;
        t.n_type_i += x.n_type_i;
        t.n_type_ii += x.n_type_ii;
      }
    }
    rep.n_train_features += train.size();
    rep.n_test_features += test.size();
    for (auto v : ev.verdicts) {
      v.row = std::to_string(r) + ":" + v.row;
      out.verdicts.push_back(std::move(v));
    }
    rep.bootstrap_repeats.push_back(ev.errors);
    out.evaluation = std::move(ev);
  }
  // The reported rates are the mean over repeats; counts are pooled.
  const double reps = static_cast<double>(splits.size());
  for (std::size_t e = 0; e < totals.size(); ++e) {
    totals[e].rates.type_i = sum_i[e] / reps;
    totals[e].rates.type_ii = sum_ii[e] / reps;
  }
  rep.errors = totals;

  // Table-shaped parameters come from a fit over the whole dataset.
  const MlrModel full = with_stage("fit full dataset", [&] { return mlr_train(all, config.class_min()); });
  rep.gev = gev_table_for(full, all);
  fill_medians(rep, all);
  write_outputs(config, out, all);
  return out;
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& config) {
  config.validate();
  return config.mode == ExperimentMode::kSimulate ? run_simulated(config) : run_measured(config);
}

Json cmd_simulate(const ExperimentConfig& config, const fs::path& out_dir) {
  config.sim.validate();
  with_stage("create " + out_dir.string(), [&] { return fs::create_directories(out_dir); });
  const std::size_t n = config.n_realizations;
  std::vector<Json> entries(n);
  std::mutex io;
  parallel_for(n, config.threads, [&](std::size_t i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "realization_%04zu", i);
    const std::string where = "simulate realization " + std::to_string(i);
    const auto sim = with_stage(where, [&] { return simulate_realization(config.sim, config.seed, i); });
    const PasMap pas = compute_pas(sim.cir);
    Json rays = Json::array();
    for (const auto& c : sim.channel.clusters) rays.push_back(c);
    const Json extra{{"realization", i}, {"seed", sim.config.seed}};
    with_stage("write " + (out_dir / stem).string(), [&] {
      write_cir_tensor(out_dir / (std::string(stem) + ".cir.json"), sim.cir, extra);
      write_pas_json(out_dir / (std::string(stem) + ".pas.json"), pas);
      write_json_file(out_dir / (std::string(stem) + ".truth.json"),
                      Json{{"truth", sim.channel.truth}, {"clusters", rays}});
      return 0;
    });
    std::lock_guard lock(io);
    entries[i] = Json{{"index", i},
                      {"seed", sim.config.seed},
                      {"cir", std::string(stem) + ".cir.json"},
                      {"pas", std::string(stem) + ".pas.json"},
                      {"truth", std::string(stem) + ".truth.json"}};
  });
  Json manifest{{"type", "simulation"},
                {"master_seed", config.seed},
                {"n_realizations", n},
                {"sim", config.sim},
                {"realizations", entries}};
  with_stage("write manifest", [&] {
    write_json_file(out_dir / "manifest.json", manifest);
    return 0;
  });
  return manifest;
}

ExtractionResult cmd_extract(const std::vector<fs::path>& inputs, const SegParams& seg,
                             const MetricConfig& metric, std::size_t threads) {
  struct Job {
    fs::path cir;
    long realization;
  };
  std::vector<Job> jobs;
  for (const auto& in : inputs) {
    const Json j = read_json_file(in);
    if (j.is_object() && j.contains("realizations")) {
      for (const auto& e : j.at("realizations")) {
        jobs.push_back({in.parent_path() / e.at("cir").get<std::string>(), e.at("index").get<long>()});
      }
    } else {
      long id = static_cast<long>(jobs.size());
      if (j.is_object() && j.contains("realization") && j.at("realization").is_number_integer()) {
        id = j.at("realization").get<long>();
      }
      jobs.push_back({in, id});
    }
  }

  std::vector<ExtractionResult> results(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t k) {
    const Job& job = jobs[k];
    results[k] = with_stage("extract " + job.cir.string(), [&] {
      const CirTensor cir = read_cir_tensor(job.cir);
      std::optional<GroundTruth> truth;
      std::string name = job.cir.filename().string();
      if (name.ends_with(".cir.json")) {
        const fs::path tp = job.cir.parent_path() / (name.substr(0, name.size() - 9) + ".truth.json");
        if (fs::exists(tp)) {
          const Json tj = read_json_file(tp);
          truth = (tj.contains("truth") ? tj.at("truth") : tj).get<GroundTruth>();
        }
      }
      return extract_features(cir, seg, metric, truth, job.realization);
    });
  });

  ExtractionResult all;
  for (auto& r : results) {
    all.rows.insert(all.rows.end(), r.rows.begin(), r.rows.end());
    all.skipped.insert(all.skipped.end(), r.skipped.begin(), r.skipped.end());
    all.clusters_found += r.clusters_found;
    all.los_present = all.los_present || r.los_present;
    all.los_missed = all.los_missed || r.los_missed;
    all.clusters.insert(all.clusters.end(), r.clusters.begin(), r.clusters.end());
  }
  return all;
}

}  // namespace nlosid
