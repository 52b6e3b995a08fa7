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

#include "nlosid/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string_view>

#include "nlosid/error.hpp"

namespace nlosid {
namespace {

namespace fs = std::filesystem;

// Reads `key` into `out` when present; type mismatches become ConfigError.
template <typename T>
void opt_field(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

template <typename T>
T req_field(const Json& j, const char* key, const char* doc) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError(std::string(doc) + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string(doc) + " field '" + key + "': " + e.what());
  }
}

void opt_range(const Json& j, const char* key, Range& r) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(std::string("config field '") + key + "' must be [lo, hi]");
  }
  r = {v[0].get<double>(), v[1].get<double>()};
}

Json range_json(const Range& r) { return Json::array({r.lo, r.hi}); }

void require_object(const Json& j, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
}

// Accepted keys are exactly the ones a default value serializes.
void reject_unknown_keys(const Json& j, const Json& reference, const char* what) {
  for (const auto& [key, _] : j.items()) {
    if (!reference.contains(key)) throw ConfigError(std::string("unknown ") + what + " key '" + key + "'");
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// Line-by-line walk that remembers the byte offset of each line.
template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    fn(line, pos, line_no);
    pos = end + 1;
  }
}

[[noreturn]] void format_fail(const std::string& origin, std::size_t offset, const std::string& msg) {
  throw FormatError(origin + ": byte " + std::to_string(offset) + ": " + msg);
}

fs::path data_path_for(const fs::path& manifest) {
  std::string name = manifest.filename().string();
  const std::string suffix = ".json";
  if (name.size() > suffix.size() && name.ends_with(suffix)) {
    name = name.substr(0, name.size() - suffix.size());
  }
  return manifest.parent_path() / (name + ".bin");
}

}  // namespace

// ---------------------------------------------------------------------------
// JSON conversions

void to_json(Json& j, const AngularGrid& g) {
  j = Json{{"az_start", g.az_start}, {"az_step", g.az_step}, {"n_az", g.n_az},
           {"el_start", g.el_start}, {"el_step", g.el_step}, {"n_el", g.n_el}};
}

void from_json(const Json& j, AngularGrid& g) {
  g.az_start = req_field<double>(j, "az_start", "grid");
  g.az_step = req_field<double>(j, "az_step", "grid");
  g.n_az = req_field<std::size_t>(j, "n_az", "grid");
  g.el_start = req_field<double>(j, "el_start", "grid");
  g.el_step = req_field<double>(j, "el_step", "grid");
  g.n_el = req_field<std::size_t>(j, "n_el", "grid");
  try {
    g.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("grid: ") + e.what());
  }
}

void to_json(Json& j, const SimConfig& c) {
  j = Json{{"az_range", range_json(c.az_range)},
           {"el_range", range_json(c.el_range)},
           {"step_deg", c.step_deg},
           {"hpbw_az_deg", c.hpbw_az_deg},
           {"hpbw_el_deg", c.hpbw_el_deg},
           {"sample_rate_ghz", c.sample_rate_ghz},
           {"n_taps", c.n_taps},
           {"snr_db", c.snr_db},
           {"n_nlos_mean", c.n_nlos_mean},
           {"rays_per_cluster_mean", c.rays_per_cluster_mean},
           {"decay_ns", c.decay_ns},
           {"ray_arrival_mean_ns", c.ray_arrival_mean_ns},
           {"angular_jitter_deg", c.angular_jitter_deg},
           {"base_delay_ns", range_json(c.base_delay_ns)},
           {"nlos_gain_db", range_json(c.nlos_gain_db)},
           {"los_el_deg", range_json(c.los_el_deg)},
           {"los_companion_db", range_json(c.los_companion_db)},
           {"los_present", c.los_present},
           {"noise", c.noise},
           {"seed", c.seed}};
}

void from_json(const Json& j, SimConfig& c) {
  require_object(j, "sim config");
  reject_unknown_keys(j, Json(SimConfig{}), "sim config");
  opt_range(j, "az_range", c.az_range);
  opt_range(j, "el_range", c.el_range);
  opt_field(j, "step_deg", c.step_deg);
  opt_field(j, "hpbw_az_deg", c.hpbw_az_deg);
  opt_field(j, "hpbw_el_deg", c.hpbw_el_deg);
  opt_field(j, "sample_rate_ghz", c.sample_rate_ghz);
  opt_field(j, "n_taps", c.n_taps);
  opt_field(j, "snr_db", c.snr_db);
  opt_field(j, "n_nlos_mean", c.n_nlos_mean);
  opt_field(j, "rays_per_cluster_mean", c.rays_per_cluster_mean);
  opt_field(j, "decay_ns", c.decay_ns);
  opt_field(j, "ray_arrival_mean_ns", c.ray_arrival_mean_ns);
  opt_field(j, "angular_jitter_deg", c.angular_jitter_deg);
  opt_range(j, "base_delay_ns", c.base_delay_ns);
  opt_range(j, "nlos_gain_db", c.nlos_gain_db);
  opt_range(j, "los_el_deg", c.los_el_deg);
  opt_range(j, "los_companion_db", c.los_companion_db);
  opt_field(j, "los_present", c.los_present);
  opt_field(j, "noise", c.noise);
  opt_field(j, "seed", c.seed);
  c.validate();
}

void to_json(Json& j, const SegParams& p) {
  j = Json{{"foreground_threshold_db", p.foreground_threshold_db},
           {"min_pixels", p.min_pixels},
           {"marker_min_separation", p.marker_min_separation},
           {"smoothing_radius", p.smoothing_radius}};
}

void from_json(const Json& j, SegParams& p) {
  require_object(j, "segmentation params");
  reject_unknown_keys(j, Json(SegParams{}), "segmentation params");
  opt_field(j, "foreground_threshold_db", p.foreground_threshold_db);
  opt_field(j, "min_pixels", p.min_pixels);
  opt_field(j, "marker_min_separation", p.marker_min_separation);
  opt_field(j, "smoothing_radius", p.smoothing_radius);
  p.validate();
}

void to_json(Json& j, const MetricConfig& c) {
  j = Json{{"rp_mode", c.rp_mode == SpreadMode::kKurtosis ? "kurtosis" : "covariance"},
           {"aggregation", c.aggregation == Aggregation::kPeakPixel ? "peak" : "weighted"},
           {"gate", c.gate}};
}

void from_json(const Json& j, MetricConfig& c) {
  require_object(j, "metric config");
  reject_unknown_keys(j, Json(MetricConfig{}), "metric config");
  std::string mode = c.rp_mode == SpreadMode::kKurtosis ? "kurtosis" : "covariance";
  std::string agg = c.aggregation == Aggregation::kPeakPixel ? "peak" : "weighted";
  opt_field(j, "rp_mode", mode);
  opt_field(j, "aggregation", agg);
  opt_field(j, "gate", c.gate);
  if (mode == "kurtosis") {
    c.rp_mode = SpreadMode::kKurtosis;
  } else if (mode == "covariance") {
    c.rp_mode = SpreadMode::kCovariance;
  } else {
    throw ConfigError("rp_mode must be 'kurtosis' or 'covariance'");
  }
  if (agg == "peak") {
    c.aggregation = Aggregation::kPeakPixel;
  } else if (agg == "weighted") {
    c.aggregation = Aggregation::kPowerWeighted;
  } else {
    throw ConfigError("aggregation must be 'peak' or 'weighted'");
  }
}

void to_json(Json& j, const AnnSchedule& s) {
  j = Json{{"learning_rate", s.learning_rate},
           {"max_epochs", s.max_epochs},
           {"min_improvement", s.min_improvement},
           {"fit_norms", s.fit_norms}};
}

void from_json(const Json& j, AnnSchedule& s) {
  require_object(j, "classifier schedule");
  reject_unknown_keys(j, Json(AnnSchedule{}), "classifier schedule");
  opt_field(j, "learning_rate", s.learning_rate);
  opt_field(j, "max_epochs", s.max_epochs);
  opt_field(j, "min_improvement", s.min_improvement);
  opt_field(j, "fit_norms", s.fit_norms);
  if (!(s.learning_rate >= 0.0) || !std::isfinite(s.learning_rate)) {
    throw ConfigError("learning_rate must be non-negative");
  }
}

void to_json(Json& j, const GevParams& p) {
  j = Json{{"gamma", p.gamma}, {"mu", p.mu}, {"sigma", p.sigma}};
}

void from_json(const Json& j, GevParams& p) {
  p.gamma = req_field<double>(j, "gamma", "GEV parameters");
  p.mu = req_field<double>(j, "mu", "GEV parameters");
  p.sigma = req_field<double>(j, "sigma", "GEV parameters");
  if (!(p.sigma > 0.0)) throw FormatError("GEV sigma must be positive");
}

void to_json(Json& j, const RayCluster& c) {
  Json rays = Json::array();
  for (const Ray& r : c.rays) {
    rays.push_back({{"delay_offset_ns", r.delay_offset_ns},
                    {"amplitude", r.amplitude},
                    {"phase_rad", r.phase_rad},
                    {"az_offset_deg", r.az_offset_deg},
                    {"el_offset_deg", r.el_offset_deg}});
  }
  j = Json{{"kind", to_string(c.kind)},
           {"center_az_deg", c.center_az_deg},
           {"center_el_deg", c.center_el_deg},
           {"base_delay_ns", c.base_delay_ns},
           {"rays", rays}};
}

void to_json(Json& j, const GroundTruth& t) {
  j = Json{{"los_present", t.los_present},
           {"los_az_deg", t.los_az_deg},
           {"los_el_deg", t.los_el_deg},
           {"n_nlos", t.n_nlos}};
}

void from_json(const Json& j, GroundTruth& t) {
  t.los_present = req_field<bool>(j, "los_present", "truth");
  if (t.los_present) {
    t.los_az_deg = req_field<double>(j, "los_az_deg", "truth");
    t.los_el_deg = req_field<double>(j, "los_el_deg", "truth");
  }
  if (j.contains("n_nlos")) t.n_nlos = req_field<std::size_t>(j, "n_nlos", "truth");
}

void to_json(Json& j, const Cluster& c) {
  // Run-length encoding per elevation row: [el, az_first, length].
  Json runs = Json::array();
  for (std::size_t k = 0; k < c.pixels.size();) {
    std::size_t len = 1;
    while (k + len < c.pixels.size() && c.pixels[k + len].el == c.pixels[k].el &&
           c.pixels[k + len].az == c.pixels[k].az + len) {
      ++len;
    }
    runs.push_back(Json::array({c.pixels[k].el, c.pixels[k].az, len}));
    k += len;
  }
  j = Json{{"id", c.id},
           {"pixels_rle", runs},
           {"peak", Json::array({c.peak.el, c.peak.az})},
           {"centroid_deg", Json::array({c.centroid_az_deg, c.centroid_el_deg})},
           {"total_power", c.total_power},
           {"truth", c.truth ? Json(to_string(*c.truth)) : Json(nullptr)}};
}

void from_json(const Json& j, Cluster& c) {
  c.id = req_field<int>(j, "id", "cluster");
  c.pixels.clear();
  for (const auto& run : req_field<Json>(j, "pixels_rle", "cluster")) {
    if (!run.is_array() || run.size() != 3) throw FormatError("cluster run must be [el, az, len]");
    const auto el = run[0].get<std::size_t>();
    const auto az = run[1].get<std::size_t>();
    const auto len = run[2].get<std::size_t>();
    for (std::size_t k = 0; k < len; ++k) c.pixels.push_back({el, az + k});
  }
  const auto peak = req_field<std::vector<std::size_t>>(j, "peak", "cluster");
  const auto centroid = req_field<std::vector<double>>(j, "centroid_deg", "cluster");
  if (peak.size() != 2 || centroid.size() != 2) throw FormatError("cluster peak/centroid malformed");
  c.peak = {peak[0], peak[1]};
  c.centroid_az_deg = centroid[0];
  c.centroid_el_deg = centroid[1];
  c.total_power = req_field<double>(j, "total_power", "cluster");
  c.truth.reset();
  if (j.contains("truth") && !j.at("truth").is_null()) {
    c.truth = path_kind_from_string(req_field<std::string>(j, "truth", "cluster"));
  }
}

void to_json(Json& j, const MlrModel& m) {
  Json metrics = Json::object();
  for (Metric mt : kAllMetrics) {
    metrics[std::string(metric_name(mt))] = Json{{"LOS", m.at(mt).los}, {"NLOS", m.at(mt).nlos}};
  }
  j = Json{{"type", "mlr"}, {"metrics", metrics}};
}

void from_json(const Json& j, MlrModel& m) {
  if (req_field<std::string>(j, "type", "MLR model") != "mlr") {
    throw FormatError("MLR model: type must be 'mlr'");
  }
  const Json& metrics = req_field<Json>(j, "metrics", "MLR model");
  for (Metric mt : kAllMetrics) {
    const std::string name(metric_name(mt));
    const Json& entry = req_field<Json>(metrics, name.c_str(), "MLR model metrics");
    m.at(mt).los = req_field<GevParams>(entry, "LOS", "MLR model metric");
    m.at(mt).nlos = req_field<GevParams>(entry, "NLOS", "MLR model metric");
  }
}

namespace {

template <std::size_t N>
Json matrix_json(const char* name, std::size_t rows, std::size_t cols,
                 const std::array<double, N>& data) {
  return Json{{"name", name}, {"rows", rows}, {"cols", cols},
              {"data", std::vector<double>(data.begin(), data.end())}};
}

template <std::size_t N>
void matrix_from(const Json& layers, const char* name, std::size_t rows, std::size_t cols,
                 std::array<double, N>& out) {
  for (const auto& layer : layers) {
    if (req_field<std::string>(layer, "name", "ANN layer") != name) continue;
    const auto r = req_field<std::size_t>(layer, "rows", "ANN layer");
    const auto c = req_field<std::size_t>(layer, "cols", "ANN layer");
    const auto data = req_field<std::vector<double>>(layer, "data", "ANN layer");
    if (r != rows || c != cols || data.size() != N) {
      throw FormatError(std::string("ANN layer ") + name + " must be " + std::to_string(rows) +
                        "x" + std::to_string(cols));
    }
    for (double v : data) {
      if (!std::isfinite(v)) throw FormatError(std::string("ANN layer ") + name + " is not finite");
    }
    std::copy(data.begin(), data.end(), out.begin());
    return;
  }
  throw FormatError(std::string("ANN model lacks layer ") + name);
}

}  // namespace

void to_json(Json& j, const AnnModel& m) {
  Json layers = Json::array({matrix_json("IW", kAnnHidden, kAnnInputs, m.iw),
                             matrix_json("b1", kAnnHidden, 1, m.b1),
                             matrix_json("LW21", kAnnHidden, kAnnHidden, m.lw21),
                             matrix_json("b2", kAnnHidden, 1, m.b2),
                             matrix_json("LW32", kAnnOutputs, kAnnHidden, m.lw32),
                             matrix_json("b3", kAnnOutputs, 1, m.b3)});
  Json norms = Json::array();
  Json order = Json::array();
  for (std::size_t i = 0; i < kAnnInputs; ++i) {
    norms.push_back({{"mean", m.feature_norms[i].mean}, {"scale", m.feature_norms[i].scale}});
    order.push_back(std::string(metric_name(kAnnInputOrder[i])));
  }
  j = Json{{"type", "ann"}, {"layers", layers}, {"feature_norms", norms}, {"input_order", order},
           {"outputs", Json::array({"LOS", "NLOS"})}};
}

void from_json(const Json& j, AnnModel& m) {
  if (req_field<std::string>(j, "type", "ANN model") != "ann") {
    throw FormatError("ANN model: type must be 'ann'");
  }
  const Json& layers = req_field<Json>(j, "layers", "ANN model");
  matrix_from(layers, "IW", kAnnHidden, kAnnInputs, m.iw);
  matrix_from(layers, "b1", kAnnHidden, 1, m.b1);
  matrix_from(layers, "LW21", kAnnHidden, kAnnHidden, m.lw21);
  matrix_from(layers, "b2", kAnnHidden, 1, m.b2);
  matrix_from(layers, "LW32", kAnnOutputs, kAnnHidden, m.lw32);
  matrix_from(layers, "b3", kAnnOutputs, 1, m.b3);
  const Json& norms = req_field<Json>(j, "feature_norms", "ANN model");
  if (!norms.is_array() || norms.size() != kAnnInputs) {
    throw FormatError("ANN model needs 5 feature norms");
  }
  for (std::size_t i = 0; i < kAnnInputs; ++i) {
    m.feature_norms[i].mean = req_field<double>(norms[i], "mean", "feature norm");
    m.feature_norms[i].scale = req_field<double>(norms[i], "scale", "feature norm");
    if (!(m.feature_norms[i].scale > 0.0)) throw FormatError("feature norm scale must be positive");
  }
}

// ---------------------------------------------------------------------------
// Files

Json parse_json(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    format_fail(origin, e.byte, e.what());
  }
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

Json read_json_file(const fs::path& path) { return parse_json(read_text_file(path), path.string()); }

void write_json_file(const fs::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

void write_cir_tensor(const fs::path& manifest_path, const CirTensor& cir, const Json& extra) {
  const fs::path data = data_path_for(manifest_path);
  std::string bytes;
  bytes.resize(cir.data().size() * 8);
  std::size_t o = 0;
  auto put = [&](float f) {
    const auto u = std::bit_cast<std::uint32_t>(f);
    for (int b = 0; b < 4; ++b) bytes[o++] = static_cast<char>((u >> (8 * b)) & 0xffu);
  };
  for (const Complex& c : cir.data()) {
    put(static_cast<float>(c.real()));
    put(static_cast<float>(c.imag()));
  }
  write_text_file(data, bytes);

  Json m = extra.is_object() ? extra : Json::object();
  m["grid"] = cir.grid();
  m["sample_rate_ghz"] = cir.sample_rate_ghz();
  m["n_taps"] = cir.n_taps();
  m["dtype"] = "c64le";
  m["data_file"] = data.filename().string();
  write_json_file(manifest_path, m);
}

CirTensor read_cir_tensor(const fs::path& manifest_path) {
  const Json m = read_json_file(manifest_path);
  const std::string origin = manifest_path.string();
  if (req_field<std::string>(m, "dtype", origin.c_str()) != "c64le") {
    throw FormatError(origin + ": dtype must be c64le");
  }
  const auto grid = req_field<AngularGrid>(m, "grid", origin.c_str());
  const auto rate = req_field<double>(m, "sample_rate_ghz", origin.c_str());
  const auto n_taps = req_field<std::size_t>(m, "n_taps", origin.c_str());
  if (!(rate > 0.0)) throw FormatError(origin + ": sample_rate_ghz must be positive");
  fs::path data = data_path_for(manifest_path);
  if (m.contains("data_file")) {
    data = manifest_path.parent_path() / req_field<std::string>(m, "data_file", origin.c_str());
  }
  const std::string bytes = read_text_file(data);
  CirTensor cir(grid, rate, n_taps);
  const std::size_t expected = cir.data().size() * 8;
  if (bytes.size() != expected) {
    format_fail(data.string(), std::min(bytes.size(), expected),
                "expected " + std::to_string(expected) + " bytes, found " +
                    std::to_string(bytes.size()));
  }
  auto get = [&](std::size_t off) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) {
      u |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + b])) << (8 * b);
    }
    return static_cast<double>(std::bit_cast<float>(u));
  };
  auto out = cir.data();
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double re = get(8 * k);
    const double im = get(8 * k + 4);
    if (!std::isfinite(re) || !std::isfinite(im)) format_fail(data.string(), 8 * k, "non-finite sample");
    out[k] = Complex(re, im);
  }
  return cir;
}

void write_pas_json(const fs::path& path, const PasMap& pas) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < pas.grid.n_el; ++i) {
    std::vector<double> row(pas.grid.n_az);
    for (std::size_t j = 0; j < pas.grid.n_az; ++j) row[j] = pas.at(i, j);
    rows.push_back(row);
  }
  write_json_file(path, Json{{"grid", pas.grid}, {"unit", "linear"}, {"power", rows}});
}

void write_pas_csv(const fs::path& path, const PasMap& pas) {
  const AngularGrid& g = pas.grid;
  std::string out = "# nlosid pasmap\n";
  out += "# grid az_start=" + format_double(g.az_start) + ",az_step=" + format_double(g.az_step) +
         ",n_az=" + std::to_string(g.n_az) + ",el_start=" + format_double(g.el_start) +
         ",el_step=" + format_double(g.el_step) + ",n_el=" + std::to_string(g.n_el) + "\n";
  out += "# unit linear\n";
  out += "# rows elevation ascending, columns azimuth ascending\n";
  for (std::size_t i = 0; i < g.n_el; ++i) {
    for (std::size_t j = 0; j < g.n_az; ++j) {
      if (j) out += ',';
      out += format_double(pas.at(i, j));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

PasMap read_pas(const fs::path& path) {
  const std::string text = read_text_file(path);
  const std::string origin = path.string();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) format_fail(origin, 0, "empty PAS file");

  PasMap pas;
  if (text[first] == '{') {
    const Json j = parse_json(text, origin);
    pas.grid = req_field<AngularGrid>(j, "grid", origin.c_str());
    if (j.contains("unit") && j.at("unit") != "linear") throw FormatError(origin + ": unit must be linear");
    const auto rows = req_field<std::vector<std::vector<double>>>(j, "power", origin.c_str());
    if (rows.size() != pas.grid.n_el) throw FormatError(origin + ": row count does not match grid");
    for (const auto& row : rows) {
      if (row.size() != pas.grid.n_az) throw FormatError(origin + ": column count does not match grid");
      pas.power.insert(pas.power.end(), row.begin(), row.end());
    }
  } else {
    bool have_grid = false;
    for_each_line(text, [&](std::string_view line, std::size_t off, std::size_t) {
      line = trim(line);
      if (line.empty()) return;
      if (line.front() == '#') {
        const std::string_view tag = "# grid ";
        if (line.starts_with(tag)) {
          std::string_view rest = line.substr(tag.size());
          for (std::string_view kv : split_csv(rest)) {
            const auto eq = kv.find('=');
            if (eq == std::string_view::npos) format_fail(origin, off, "malformed grid header");
            const std::string_view key = kv.substr(0, eq);
            double v = 0.0;
            if (!parse_number(kv.substr(eq + 1), v)) format_fail(origin, off, "malformed grid value");
            if (key == "az_start") pas.grid.az_start = v;
            else if (key == "az_step") pas.grid.az_step = v;
            else if (key == "n_az") pas.grid.n_az = static_cast<std::size_t>(v);
            else if (key == "el_start") pas.grid.el_start = v;
            else if (key == "el_step") pas.grid.el_step = v;
            else if (key == "n_el") pas.grid.n_el = static_cast<std::size_t>(v);
            else format_fail(origin, off, "unknown grid key");
          }
          have_grid = true;
        }
        return;
      }
      const auto fields = split_csv(line);
      for (std::string_view f : fields) {
        double v = 0.0;
        if (!parse_number(f, v)) format_fail(origin, off, "unparseable power value '" + std::string(f) + "'");
        pas.power.push_back(v);
      }
    });
    if (!have_grid) format_fail(origin, 0, "missing '# grid' header");
    if (pas.power.size() != pas.grid.size()) {
      format_fail(origin, text.size(), "PAS holds " + std::to_string(pas.power.size()) +
                                           " values, grid needs " + std::to_string(pas.grid.size()));
    }
  }
  try {
    pas.grid.validate();
  } catch (const ConfigError& e) {
    throw FormatError(origin + ": " + e.what());
  }
  for (double v : pas.power) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw FormatError(origin + ": PAS power must be finite and >= 0");
  }
  return pas;
}

std::vector<SweepSample> read_sweep_csv(const fs::path& path) {
  const std::string text = read_text_file(path);
  const std::string origin = path.string();
  std::vector<SweepSample> rows;
  bool first = true;
  for_each_line(text, [&](std::string_view line, std::size_t off, std::size_t) {
    line = trim(line);
    if (line.empty() || line.front() == '#') return;
    const auto f = split_csv(line);
    double v[5];
    bool ok = f.size() == 5;
    for (std::size_t k = 0; ok && k < 5; ++k) ok = parse_number(f[k], v[k]);
    if (!ok) {
      if (first) {
        first = false;
        return;  // header
      }
      format_fail(origin, off, "expected az_deg,el_deg,freq_ghz,re,im");
    }
    first = false;
    rows.push_back({v[0], v[1], v[2], Complex(v[3], v[4])});
  });
  return rows;
}

void write_sweep_csv(const fs::path& path, const std::vector<SweepSample>& rows) {
  std::string out = "az_deg,el_deg,freq_ghz,re,im\n";
  for (const auto& r : rows) {
    out += format_double(r.az_deg) + ',' + format_double(r.el_deg) + ',' +
           format_double(r.freq_ghz) + ',' + format_double(r.value.real()) + ',' +
           format_double(r.value.imag()) + '\n';
  }
  write_text_file(path, out);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_feature_csv(const std::vector<FeatureRow>& rows) {
  std::string out = std::string(kFeatureCsvHeader) + "\n";
  for (const auto& r : rows) {
    const FeatureVector& f = r.features;
    out += format_double(f.r_p) + ',' + format_double(f.k_t) + ',' + format_double(f.k_f) + ',' +
           format_double(f.tau_mean_ns) + ',' + format_double(f.tau_rms_ns) + ',' +
           (f.label ? std::string(to_string(*f.label)) : std::string()) + ',' +
           std::to_string(r.realization) + ',' + std::to_string(r.cluster_id) + '\n';
  }
  return out;
}

void write_feature_csv(const fs::path& path, const std::vector<FeatureRow>& rows) {
  write_text_file(path, format_feature_csv(rows));
}

std::vector<FeatureRow> parse_feature_csv(const std::string& text, const std::string& origin) {
  static constexpr std::string_view kRequired[] = {"r_p", "k_t", "k_f", "tau_mean_ns",
                                                   "tau_rms_ns", "label"};
  std::vector<FeatureRow> rows;
  bool header_seen = false;
  std::size_t n_cols = 0;
  long realization_col = -1;
  long cluster_col = -1;
  for_each_line(text, [&](std::string_view line, std::size_t off, std::size_t) {
    if (trim(line).empty()) return;
    const auto f = split_csv(line);
    if (!header_seen) {
      if (f.size() < 6) format_fail(origin, off, "feature header needs r_p,k_t,k_f,tau_mean_ns,tau_rms_ns,label");
      for (std::size_t k = 0; k < 6; ++k) {
        if (f[k] != kRequired[k]) {
          format_fail(origin, off, "feature header column " + std::to_string(k + 1) + " must be '" +
                                       std::string(kRequired[k]) + "'");
        }
      }
      for (std::size_t k = 6; k < f.size(); ++k) {
        if (f[k] == "realization") realization_col = static_cast<long>(k);
        if (f[k] == "cluster_id") cluster_col = static_cast<long>(k);
      }
      n_cols = f.size();
      header_seen = true;
      return;
    }
    if (f.size() != n_cols) {
      format_fail(origin, off, "expected " + std::to_string(n_cols) + " columns, found " +
                                   std::to_string(f.size()));
    }
    FeatureRow row;
    double v[5];
    for (std::size_t k = 0; k < 5; ++k) {
      if (!parse_number(f[k], v[k]) || !std::isfinite(v[k])) {
        format_fail(origin, off, "unparseable value '" + std::string(f[k]) + "'");
      }
    }
    row.features = {v[0], v[1], v[2], v[3], v[4], std::nullopt};
    if (!f[5].empty()) {
      if (f[5] == "LOS") {
        row.features.label = PathKind::kLos;
      } else if (f[5] == "NLOS") {
        row.features.label = PathKind::kNlos;
      } else {
        format_fail(origin, off, "label must be LOS, NLOS or empty");
      }
    }
    auto int_col = [&](long col, auto& out) {
      if (col < 0) return;
      double d = 0.0;
      if (!parse_number(f[static_cast<std::size_t>(col)], d)) format_fail(origin, off, "bad integer column");
      out = static_cast<std::remove_reference_t<decltype(out)>>(d);
    };
    int_col(realization_col, row.realization);
    int_col(cluster_col, row.cluster_id);
    rows.push_back(row);
  });
  if (!header_seen) format_fail(origin, 0, "empty feature file");
  return rows;
}

std::vector<FeatureRow> read_feature_csv(const fs::path& path) {
  return parse_feature_csv(read_text_file(path), path.string());
}

}  // namespace nlosid
