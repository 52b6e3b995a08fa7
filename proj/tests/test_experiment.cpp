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

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "nlosid/error.hpp"
#include "nlosid/experiment.hpp"
#include "nlosid/random.hpp"

using namespace nlosid;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("nlosid_exp_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.n_realizations = 30;
  c.n_train = 20;
  c.n_test = 10;
  c.min_class_samples = 5;
  c.ann.max_epochs = 200;
  c.seed = 77;
  return c;
}

void check_rows_equal(const std::vector<FeatureRow>& a, const std::vector<FeatureRow>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].features == b[k].features);
    CHECK(a[k].realization == b[k].realization);
    CHECK(a[k].cluster_id == b[k].cluster_id);
  }
}

RayCluster cluster_at(PathKind kind, double az, double el, double delay, double amp, int rays) {
  RayCluster c;
  c.kind = kind;
  c.center_az_deg = az;
  c.center_el_deg = el;
  c.base_delay_ns = delay;
  for (int r = 0; r < rays; ++r) {
    c.rays.push_back({1.5 * r, amp * std::exp(-0.3 * r), 0.7 * r, 1.5 * (r % 3) - 1.5, 1.2 * (r % 2)});
  }
  return c;
}

}  // namespace

TEST_CASE("fixture with one LOS and two NLOS clusters yields three rows") {
  SimConfig sc;
  sc.seed = 5;
  const std::vector<RayCluster> clusters{
      cluster_at(PathKind::kLos, 0.0, 0.0, 8.0, 1.0, 2),
      cluster_at(PathKind::kNlos, 90.0, 20.0, 20.0, 0.4, 8),
      cluster_at(PathKind::kNlos, -120.0, -10.0, 30.0, 0.3, 8)};
  const CirTensor cir = render_cir(clusters, sc);
  const GroundTruth truth{true, 0.0, 0.0, 2};
  const SegParams seg = SegParams::for_grid(5.0, 5.0);
  const ExtractionResult r = extract_features(cir, seg, {}, truth, 4);
  CHECK(r.clusters_found == 3);
  REQUIRE(r.rows.size() == 3);
  CHECK(std::count_if(r.rows.begin(), r.rows.end(),
                      [](const FeatureRow& x) { return x.features.label == PathKind::kLos; }) == 1);
  for (const auto& row : r.rows) CHECK(row.realization == 4);
  CHECK_FALSE(r.los_missed);
  const ExtractionResult again = extract_features(cir, seg, {}, truth, 4);
  check_rows_equal(again.rows, r.rows);
}

TEST_CASE("an empty PAS gives no rows") {
  const CirTensor cir(SimConfig{}.grid(), 7.0, 64);
  const ExtractionResult r = extract_features(cir, SegParams{}, {}, std::nullopt, 0);
  CHECK(r.rows.empty());
  CHECK(r.clusters_found == 0);
}

TEST_CASE("simulate then extract matches the in-memory pipeline") {
  TempDir dir("chain");
  ExperimentConfig c = small_config();
  c.threads = 2;
  const Json manifest = cmd_simulate(c, dir.path);
  CHECK(manifest["realizations"].size() == 30);
  CHECK(fs::exists(dir.path / "manifest.json"));
  CHECK(fs::exists(dir.path / "realization_0029.cir.json"));
  CHECK(fs::exists(dir.path / "realization_0029.pas.json"));
  CHECK(manifest["realizations"][3]["seed"] == derive_seed(77, 3));

  const ExtractionResult chained = cmd_extract({dir.path / "manifest.json"}, c.seg_params(), c.metric, 3);

  std::vector<FeatureRow> direct;
  for (std::size_t i = 0; i < 30; ++i) {
    const auto sim = simulate_realization(c.sim, c.seed, i);
    CHECK(read_cir_tensor(dir.path / manifest["realizations"][i]["cir"].get<std::string>()) == sim.cir);
    const auto ex = extract_features(sim.cir, c.seg_params(), c.metric, sim.channel.truth, static_cast<long>(i));
    direct.insert(direct.end(), ex.rows.begin(), ex.rows.end());
  }
  check_rows_equal(chained.rows, direct);

  // The experiment trains on the first n_train realizations and tests on the rest.
  const ExperimentOutput out = run_experiment(c);
  check_rows_equal(out.features, direct);
  std::vector<FeatureVector> train, test;
  for (const auto& row : direct) (row.realization < 20 ? train : test).push_back(row.features);
  const Evaluation ev = train_and_evaluate(train, test, 5, c.ann, derive_seed(77, 0xA22A22A22ULL));
  REQUIRE(ev.errors.size() == out.report.errors.size());
  for (std::size_t k = 0; k < ev.errors.size(); ++k) {
    CHECK(ev.errors[k].rates.type_i == out.report.errors[k].rates.type_i);
    CHECK(ev.errors[k].rates.type_ii == out.report.errors[k].rates.type_ii);
  }
  CHECK(ev.mlr == out.evaluation.mlr);
  CHECK(ev.ann == out.evaluation.ann);

  // Reading individual tensors instead of the manifest keeps realization ids.
  const ExtractionResult single = cmd_extract({dir.path / "realization_0002.cir.json"}, c.seg_params(), c.metric, 1);
  for (const auto& row : single.rows) CHECK(row.realization == 2);
}

TEST_CASE("zero realizations writes only the manifest") {
  TempDir dir("empty");
  ExperimentConfig c = small_config();
  c.n_realizations = 0;
  const Json m = cmd_simulate(c, dir.path);
  CHECK(m["realizations"].empty());
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir.path)) {
    (void)e;
    ++files;
  }
  CHECK(files == 1);
  CHECK(fs::exists(dir.path / "manifest.json"));
}

TEST_CASE("report structure and verdict-log consistency") {
  ExperimentConfig c = small_config();
  const ExperimentOutput out = run_experiment(c);
  const auto& names = error_row_names();
  CHECK(names == std::vector<std::string>{"r_p", "k_t", "k_f", "tau_mean", "tau_rms", "joint-MLR", "ANN"});
  REQUIRE(out.report.errors.size() == names.size());
  for (std::size_t k = 0; k < names.size(); ++k) {
    const ErrorRow& row = out.report.errors[k];
    CHECK(row.name == names[k]);
    CHECK(row.classifier == (names[k] == "ANN" ? "ANN" : "MLR"));
    CHECK(row.rates.type_i >= 0.0);
    CHECK(row.rates.type_i <= 1.0);
    CHECK(row.rates.type_ii >= 0.0);
    CHECK(row.rates.type_ii <= 1.0);
    std::vector<PathKind> decisions, truths;
    for (const auto& v : out.verdicts) {
      if (v.row != row.name) continue;
      decisions.push_back(v.verdict.decision);
      truths.push_back(v.truth);
    }
    CHECK(decisions.size() == out.report.n_test_features);
    const ErrorRates again = error_rates(decisions, truths);
    CHECK(again.type_i == row.rates.type_i);
    CHECK(again.type_ii == row.rates.type_ii);
  }
  CHECK(out.report.errors[5].metrics.size() == 5);
  CHECK(out.report.realizations.size() == 30);
  std::size_t train_real = 0;
  for (const auto& r : out.report.realizations) train_real += r.train;
  CHECK(train_real == 20);

  const Json j = report_to_json(out.report);
  CHECK(j["mode"] == "simulate");
  CHECK(j["error_table"].size() == 7);
  CHECK(j["gev_table"]["r_p"]["LOS"].contains("rmse"));
  CHECK(j["counts"]["skipped_clusters"] == out.report.skipped.size());
  CHECK_FALSE(render_report_text(j).empty());
}

TEST_CASE("results do not depend on the thread count") {
  ExperimentConfig a = small_config();
  a.threads = 1;
  ExperimentConfig b = a;
  b.threads = 4;
  CHECK(report_to_json(run_experiment(a).report).dump() == report_to_json(run_experiment(b).report).dump());
}

TEST_CASE("experiment writes its output files") {
  TempDir dir("out");
  ExperimentConfig c = small_config();
  c.output_dir = dir.path;
  (void)run_experiment(c);
  for (const char* f : {"report.json", "report.txt", "features.csv", "verdicts.csv", "mlr_model.json",
                        "ann_model.json", "config.json", "curves/r_p_LOS.csv", "curves/tau_rms_NLOS.csv"}) {
    CHECK_MESSAGE(fs::exists(dir.path / f), f);
  }
  const Json cfg = read_json_file(dir.path / "config.json");
  CHECK_FALSE(cfg.contains("output_dir"));
  CHECK(experiment_config_from_json(cfg).seed == 77);
  CHECK(read_feature_csv(dir.path / "features.csv").size() > 0);
}

TEST_CASE("measured mode bootstraps over samples") {
  TempDir dir("measured");
  std::vector<FeatureRow> rows;
  Rng rng(51);
  for (int k = 0; k < 100; ++k) {
    FeatureRow r;
    const bool los = k % 2 == 0;
    r.features = {los ? rng.normal(0.8, 0.1) : rng.normal(0.5, 0.1), rng.normal(los ? 400 : 200, 50),
                  rng.normal(2.6, 0.2),   rng.normal(los ? 3 : 12, 1.5),
                  rng.normal(los ? 1.5 : 3, 0.4), los ? PathKind::kLos : PathKind::kNlos};
    r.realization = k;
    rows.push_back(r);
  }
  write_feature_csv(dir.path / "f.csv", rows);
  ExperimentConfig c;
  c.mode = ExperimentMode::kMeasured;
  c.measured_features = dir.path / "f.csv";
  c.ann.max_epochs = 200;
  const ExperimentOutput out = run_experiment(c);
  const Report& rep = out.report;
  REQUIRE(rep.bootstrap_repeats.size() == 10);
  REQUIRE(rep.bootstrap_partitions.size() == 10);
  for (const auto& p : rep.bootstrap_partitions) {
    CHECK(p.train.size() == 30);
    CHECK(p.test.size() == 20);
    std::set<std::size_t> s(p.train.begin(), p.train.end());
    for (std::size_t t : p.test) CHECK(s.insert(t).second);
  }
  for (std::size_t e = 0; e < rep.errors.size(); ++e) {
    double si = 0, sii = 0;
    for (const auto& r : rep.bootstrap_repeats) {
      si += r[e].rates.type_i;
      sii += r[e].rates.type_ii;
    }
    CHECK(rep.errors[e].rates.type_i == doctest::Approx(si / 10).epsilon(1e-15));
    CHECK(rep.errors[e].rates.type_ii == doctest::Approx(sii / 10).epsilon(1e-15));
  }
  CHECK(rep.n_test_features == 200);
  CHECK(report_to_json(rep)["bootstrap_repeats"].size() == 10);

  c.bootstrap.n_train = 90;
  CHECK_THROWS_AS((void)run_experiment(c), ConfigError);
}

TEST_CASE("sweep ingestion") {
  SimConfig sc;
  sc.az_range = {-10, 10};
  sc.el_range = {0, 10};
  sc.seed = 9;
  const Channel ch = generate_channel(sc);
  const CirTensor cir = render_cir(ch.clusters, sc);
  std::vector<SweepSample> samples;
  for (std::size_t i = 0; i < cir.grid().n_el; ++i) {
    for (std::size_t j = 0; j < cir.grid().n_az; ++j) {
      const CfrSlice cfr = cfr_from_cir(cir.pixel(i, j), cir.sample_rate_ghz());
      for (std::size_t k = 0; k < cfr.values.size(); ++k) {
        samples.push_back({cir.grid().az_deg(j), cir.grid().el_deg(i), cfr.frequency(k), cfr.values[k]});
      }
    }
  }
  Rng rng(3);
  for (std::size_t k = samples.size() - 1; k > 0; --k) std::swap(samples[k], samples[rng.below(k + 1)]);

  const CirTensor back = ingest_sweeps(samples, std::nullopt, Window::kNone);
  CHECK(back.grid() == cir.grid());
  REQUIRE(back.n_taps() == cir.n_taps());
  CHECK(back.sample_rate_ghz() == doctest::Approx(cir.sample_rate_ghz()).epsilon(1e-12));
  double worst = 0, scale = 0;
  for (std::size_t k = 0; k < cir.data().size(); ++k) {
    worst = std::max(worst, std::abs(back.data()[k] - cir.data()[k]));
    scale = std::max(scale, std::abs(cir.data()[k]));
  }
  CHECK(worst <= 1e-9 * scale);

  // Drop one direction.
  std::vector<SweepSample> partial;
  for (const auto& s : samples) {
    if (!(s.az_deg == 5.0 && s.el_deg == 10.0)) partial.push_back(s);
  }
  try {
    (void)ingest_sweeps(partial, cir.grid(), Window::kHann);
    FAIL("expected a missing-direction error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("(5, 10)") != std::string::npos);
  }
}

TEST_CASE("full-circle measurement grid keeps both seam columns") {
  const AngularGrid g{-180.0, 5.0, 73, -45.0, 5.0, 28};
  std::vector<SweepSample> samples;
  for (std::size_t i = 0; i < g.n_el; ++i) {
    for (std::size_t j = 0; j < g.n_az; ++j) {
      for (int k = 0; k < 8; ++k) {
        samples.push_back({g.az_deg(j), g.el_deg(i), 57.0 + 0.1 * k, Complex(1.0 + static_cast<double>(j), k)});
      }
    }
  }
  const CirTensor cir = ingest_sweeps(samples, std::nullopt, Window::kHann);
  CHECK(cir.grid().n_az == 73);
  CHECK(cir.grid().n_el == 28);
  CHECK(cir.n_taps() == 8);
  CHECK(cir.pixel(0, 0)[0] != cir.pixel(0, 72)[0]);
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS((void)experiment_config_from_json(Json::parse(R"({"n_train": 200, "n_test": 100})")), ConfigError);
  CHECK_THROWS_AS((void)experiment_config_from_json(Json::parse(R"({"mode": "replay"})")), ConfigError);
  CHECK_THROWS_AS((void)experiment_config_from_json(Json::parse(R"({"n_realisations": 5})")), ConfigError);
  CHECK_THROWS_AS((void)experiment_config_from_json(Json::parse(R"({"mode": "measured"})")), ConfigError);
  CHECK_THROWS_AS((void)experiment_config_from_json(Json::parse(R"({"sim": {"hpbw_az_deg": 0}})")), ConfigError);
  CHECK_THROWS_AS((void)experiment_config_from_json(Json::parse("[1]")), ConfigError);
  const ExperimentConfig c = experiment_config_from_json(
      Json::parse(R"({"mode": "measured", "measured_features": "f.csv"})"), "/data");
  CHECK(c.measured_features == fs::path("/data/f.csv"));
  CHECK(c.class_min() == 5);
  CHECK(ExperimentConfig{}.class_min() == 20);
}

TEST_CASE("stage failures name the stage") {
  ExperimentConfig c = small_config();
  c.mode = ExperimentMode::kMeasured;
  c.measured_features = "/nonexistent/features.csv";
  try {
    (void)run_experiment(c);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("load measured features") != std::string::npos);
  }
}
