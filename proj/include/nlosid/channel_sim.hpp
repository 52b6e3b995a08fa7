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

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "nlosid/grid.hpp"
#include "nlosid/pas.hpp"

namespace nlosid {

enum class PathKind { kLos, kNlos };

[[nodiscard]] std::string_view to_string(PathKind k) noexcept;
// Throws FormatError on anything but "LOS" / "NLOS".
[[nodiscard]] PathKind path_kind_from_string(std::string_view s);

struct Ray {
  double delay_offset_ns = 0.0;
  double amplitude = 0.0;  // linear
  double phase_rad = 0.0;
  double az_offset_deg = 0.0;
  double el_offset_deg = 0.0;
};

struct RayCluster {
  PathKind kind = PathKind::kNlos;
  double center_az_deg = 0.0;
  double center_el_deg = 0.0;
  double base_delay_ns = 0.0;
  std::vector<Ray> rays;

  friend bool operator==(const RayCluster&, const RayCluster&) = default;
};

inline bool operator==(const Ray& a, const Ray& b) noexcept {
  return a.delay_offset_ns == b.delay_offset_ns && a.amplitude == b.amplitude &&
         a.phase_rad == b.phase_rad && a.az_offset_deg == b.az_offset_deg &&
         a.el_offset_deg == b.el_offset_deg;
}

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct SimConfig {
  Range az_range{-180.0, 180.0};
  Range el_range{-45.0, 90.0};
  double step_deg = 5.0;
  double hpbw_az_deg = 5.0;
  double hpbw_el_deg = 5.0;
  double sample_rate_ghz = 7.0;
  std::size_t n_taps = 512;
  // Strongest-ray energy over the total noise energy of one record.
  double snr_db = 30.0;
  double n_nlos_mean = 4.0;
  double rays_per_cluster_mean = 10.0;
  double decay_ns = 4.5;
  double ray_arrival_mean_ns = 2.0;
  double angular_jitter_deg = 2.0;
  Range base_delay_ns{5.0, 40.0};
  Range nlos_gain_db{-12.0, -3.0};
  Range los_el_deg{-10.0, 10.0};
  Range los_companion_db{-25.0, -15.0};
  bool los_present = true;
  bool noise = true;
  std::uint64_t seed = 1;

  // Throws ConfigError.
  void validate() const;

  // Beam-sweep grid implied by the ranges and step.
  [[nodiscard]] AngularGrid grid() const;
  [[nodiscard]] double record_ns() const noexcept {
    return static_cast<double>(n_taps) / sample_rate_ghz;
  }
};

struct GroundTruth {
  bool los_present = false;
  double los_az_deg = 0.0;
  double los_el_deg = 0.0;
  std::size_t n_nlos = 0;
};

struct Channel {
  std::vector<RayCluster> clusters;
  GroundTruth truth;
};

// Gaussian main lobe in power; 0.5 at half the HPBW off boresight.
[[nodiscard]] double beam_gain(double d_az_deg, double d_el_deg, double hpbw_az_deg,
                               double hpbw_el_deg) noexcept;

// Draws one clustered channel from config.seed.
[[nodiscard]] Channel generate_channel(const SimConfig& config);

// Noise standard deviation per real/imaginary component, or nullopt when the
// config disables noise.
[[nodiscard]] std::optional<double> noise_sigma(const std::vector<RayCluster>& clusters,
                                                const SimConfig& config);

// Renders the beam-swept CIR tensor. Noise uses a generator stream derived
// from config.seed that is independent of the one generate_channel uses.
[[nodiscard]] CirTensor render_cir(const std::vector<RayCluster>& clusters,
                                   const SimConfig& config);

}  // namespace nlosid
