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
#include <optional>
#include <vector>

#include "nlosid/channel_sim.hpp"
#include "nlosid/grid.hpp"
#include "nlosid/pas.hpp"

namespace nlosid {

struct Cluster {
  int id = 0;
  std::vector<PixelIndex> pixels;  // sorted (el, az)
  PixelIndex peak{};
  double centroid_az_deg = 0.0;
  double centroid_el_deg = 0.0;
  double total_power = 0.0;
  std::optional<PathKind> truth;

  [[nodiscard]] bool contains(PixelIndex p) const;

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

struct SegParams {
  double foreground_threshold_db = 10.0;
  std::size_t min_pixels = 2;
  std::size_t marker_min_separation = 1;
  std::size_t smoothing_radius = 1;

  void validate() const;

  // Defaults tied to the sweep resolution: marker separation = ceil(HPBW /
  // step), min_pixels 4 on fine (<= 2 deg) grids and 2 otherwise, and a
  // unit smoothing disc only when the beam spans at least two pixels.
  [[nodiscard]] static SegParams for_grid(double step_deg, double hpbw_deg);
};

// Median pixel power.
[[nodiscard]] double estimate_noise_floor(const PasMap& pas);

// Watershed partition of the PAS foreground into clusters, ids ordered by
// descending total power. Empty foreground yields an empty list.
[[nodiscard]] std::vector<Cluster> segment(const PasMap& pas, const SegParams& params);

struct TruthLabeling {
  bool los_missed = false;  // LOS exists but fell into the background
  std::optional<int> los_cluster_id;
};

// Marks the cluster holding the true LOS direction LOS and every other one
// NLOS.
TruthLabeling label_clusters_with_truth(std::vector<Cluster>& clusters, const AngularGrid& grid,
                                        const GroundTruth& truth);

}  // namespace nlosid
