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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlosid/channel_sim.hpp"
#include "nlosid/classifiers.hpp"
#include "nlosid/gev.hpp"
#include "nlosid/metrics.hpp"
#include "nlosid/pas.hpp"
#include "nlosid/segmentation.hpp"

namespace nlosid {

using Json = nlohmann::json;

// All from_json overloads throw ConfigError (for configs) or FormatError (for
// data documents) on missing or mistyped fields. Optional config fields keep
// their defaults when absent.
void to_json(Json& j, const AngularGrid& g);
void from_json(const Json& j, AngularGrid& g);
void to_json(Json& j, const SimConfig& c);
void from_json(const Json& j, SimConfig& c);
void to_json(Json& j, const SegParams& p);
void from_json(const Json& j, SegParams& p);
void to_json(Json& j, const MetricConfig& c);
void from_json(const Json& j, MetricConfig& c);
void to_json(Json& j, const AnnSchedule& s);
void from_json(const Json& j, AnnSchedule& s);
void to_json(Json& j, const GevParams& p);
void from_json(const Json& j, GevParams& p);
void to_json(Json& j, const RayCluster& c);
void to_json(Json& j, const GroundTruth& t);
void from_json(const Json& j, GroundTruth& t);
void to_json(Json& j, const Cluster& c);
void from_json(const Json& j, Cluster& c);
void to_json(Json& j, const MlrModel& m);
void from_json(const Json& j, MlrModel& m);
void to_json(Json& j, const AnnModel& m);
void from_json(const Json& j, AnnModel& m);

// Parses JSON text; FormatError carries the byte offset of a syntax error.
[[nodiscard]] Json parse_json(const std::string& text, const std::string& origin);
[[nodiscard]] Json read_json_file(const std::filesystem::path& path);
// Pretty-printed, key-sorted, newline-terminated.
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);
[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

// CirTensor file: JSON manifest {grid, sample_rate_ghz, n_taps, dtype:"c64le",
// data_file} next to a binary of little-endian float32 (re, im) pairs in
// (el, az, tap) order. `extra` keys are merged into the manifest.
void write_cir_tensor(const std::filesystem::path& manifest_path, const CirTensor& cir,
                      const Json& extra = Json::object());
[[nodiscard]] CirTensor read_cir_tensor(const std::filesystem::path& manifest_path);

// PasMap as JSON {grid, unit:"linear", power:[[...]]} or as CSV with a 4-line
// header. read_pas sniffs the format.
void write_pas_json(const std::filesystem::path& path, const PasMap& pas);
void write_pas_csv(const std::filesystem::path& path, const PasMap& pas);
[[nodiscard]] PasMap read_pas(const std::filesystem::path& path);

struct SweepSample {
  double az_deg = 0.0;
  double el_deg = 0.0;
  double freq_ghz = 0.0;
  Complex value;
};

// CSV rows az_deg,el_deg,freq_ghz,re,im with an optional header line.
[[nodiscard]] std::vector<SweepSample> read_sweep_csv(const std::filesystem::path& path);
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepSample>& rows);

// One CSV row of the feature dataset.
struct FeatureRow {
  FeatureVector features;
  long realization = -1;
  int cluster_id = -1;
};

inline constexpr const char* kFeatureCsvHeader =
    "r_p,k_t,k_f,tau_mean_ns,tau_rms_ns,label,realization,cluster_id";

[[nodiscard]] std::string format_feature_csv(const std::vector<FeatureRow>& rows);
void write_feature_csv(const std::filesystem::path& path, const std::vector<FeatureRow>& rows);
// Requires the first six header columns; realization / cluster_id optional.
[[nodiscard]] std::vector<FeatureRow> parse_feature_csv(const std::string& text,
                                                        const std::string& origin);
[[nodiscard]] std::vector<FeatureRow> read_feature_csv(const std::filesystem::path& path);

// Shortest round-trip decimal form.
[[nodiscard]] std::string format_double(double v);

}  // namespace nlosid
