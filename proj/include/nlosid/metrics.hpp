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
#include <optional>
#include <span>
#include <string_view>

#include "nlosid/channel_sim.hpp"
#include "nlosid/pas.hpp"
#include "nlosid/segmentation.hpp"

namespace nlosid {

// 2x2 symmetric matrix of power-weighted angular moments over one cluster.
struct CoKurtosisMatrix {
  double rho11 = 0.0;
  double rho12 = 0.0;
  double rho22 = 0.0;
};

enum class SpreadMode { kKurtosis, kCovariance };
enum class Aggregation { kPeakPixel, kPowerWeighted };

struct MetricConfig {
  SpreadMode rp_mode = SpreadMode::kKurtosis;
  Aggregation aggregation = Aggregation::kPeakPixel;
  // Discard taps below noise floor + 6 dB before the delay-domain metrics.
  bool gate = false;
};

enum class Metric : std::size_t { kRp = 0, kKt, kKf, kTauMean, kTauRms };

inline constexpr std::array<Metric, 5> kAllMetrics{Metric::kRp, Metric::kKt, Metric::kKf,
                                                   Metric::kTauMean, Metric::kTauRms};

[[nodiscard]] std::string_view metric_name(Metric m) noexcept;
// Throws ConfigError for unknown names.
[[nodiscard]] Metric metric_from_name(std::string_view name);

struct FeatureVector {
  double r_p = 0.0;
  double k_t = 0.0;
  double k_f = 0.0;
  double tau_mean_ns = 0.0;
  double tau_rms_ns = 0.0;
  std::optional<PathKind> label;

  [[nodiscard]] double get(Metric m) const noexcept;
  void set(Metric m, double v) noexcept;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// Power-weighted angular moments of a cluster; azimuth is measured relative
// to the peak pixel so clusters straddling +-180 deg stay contiguous.
[[nodiscard]] CoKurtosisMatrix co_kurtosis(const Cluster& cluster, const PasMap& pas,
                                           SpreadMode mode);

// min / max eigenvalue of the symmetric 2x2 matrix.
[[nodiscard]] double eigen_ratio(const CoKurtosisMatrix& m);

// Population kurtosis m4 / m2^2 of |samples|.
[[nodiscard]] double time_kurtosis(std::span<const Complex> taps);
[[nodiscard]] double freq_kurtosis(const CfrSlice& cfr);

// Power-weighted delay moments in ns; tap n sits at n * tap_spacing_ns.
[[nodiscard]] double mean_excess_delay(std::span<const Complex> taps, double tap_spacing_ns);
[[nodiscard]] double rms_delay_spread(std::span<const Complex> taps, double tap_spacing_ns);

[[nodiscard]] FeatureVector cluster_features(const Cluster& cluster, const CirTensor& cir,
                                             const PasMap& pas, const MetricConfig& cfg);

}  // namespace nlosid
