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
#include <cmath>
#include <queue>
#include <set>

#include "nlosid/error.hpp"
#include "nlosid/random.hpp"
#include "nlosid/segmentation.hpp"
#include "oracles.hpp"

using namespace nlosid;

namespace {

struct Blob {
  double el_px;
  double az_px;
  double peak_db;
  double sigma_px;
};

// Flat unit floor with +-5 % ripple plus Gaussian blobs in pixel units.
PasMap blob_map(const AngularGrid& g, const std::vector<Blob>& blobs, std::uint64_t seed) {
  Rng rng(seed);
  PasMap pas{g, std::vector<double>(g.size())};
  for (std::size_t i = 0; i < g.n_el; ++i) {
    for (std::size_t j = 0; j < g.n_az; ++j) {
      double v = 1.0 + 0.05 * (2.0 * rng.uniform() - 1.0);
      for (const Blob& b : blobs) {
        double dj = static_cast<double>(j) - b.az_px;
        if (g.az_wraps()) {
          const double p = static_cast<double>(g.az_period());
          dj = std::remainder(dj, p);
        }
        const double di = static_cast<double>(i) - b.el_px;
        v += std::pow(10.0, b.peak_db / 10.0) * std::exp(-(di * di + dj * dj) / (2 * b.sigma_px * b.sigma_px));
      }
      pas.power[g.flat(i, j)] = v;
    }
  }
  return pas;
}

AngularGrid plain_grid() { return AngularGrid{0.0, 1.0, 40, 0.0, 1.0, 30}; }

// Connected components of the thresholded mask by breadth-first search.
std::vector<int> mask_components(const PasMap& pas, double threshold_db) {
  const auto& g = pas.grid;
  const double floor = oracle::median(pas.power);
  std::vector<int> comp(g.size(), -1);
  int next = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    auto in = [&](std::size_t q) { return 10 * std::log10(pas.power[q] / floor) >= threshold_db; };
    if (!in(k) || comp[k] >= 0) continue;
    std::queue<std::size_t> q;
    q.push(k);
    comp[k] = next;
    while (!q.empty()) {
      const PixelIndex p = g.unflat(q.front());
      q.pop();
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          const long ni = static_cast<long>(p.el) + di, nj = static_cast<long>(p.az) + dj;
          if (ni < 0 || nj < 0 || ni >= static_cast<long>(g.n_el) || nj >= static_cast<long>(g.n_az)) continue;
          const std::size_t r = g.flat(static_cast<std::size_t>(ni), static_cast<std::size_t>(nj));
          if (in(r) && comp[r] < 0) {
            comp[r] = next;
            q.push(r);
          }
        }
      }
    }
    ++next;
  }
  return comp;
}

bool eight_connected(const Cluster& c) {
  std::set<PixelIndex> left(c.pixels.begin(), c.pixels.end());
  std::vector<PixelIndex> stack{c.pixels.front()};
  left.erase(c.pixels.front());
  while (!stack.empty()) {
    const PixelIndex p = stack.back();
    stack.pop_back();
    for (auto it = left.begin(); it != left.end();) {
      const long di = std::labs(static_cast<long>(it->el) - static_cast<long>(p.el));
      const long dj = std::labs(static_cast<long>(it->az) - static_cast<long>(p.az));
      if (di <= 1 && dj <= 1) {
        stack.push_back(*it);
        it = left.erase(it);
      } else {
        ++it;
      }
    }
  }
  return left.empty();
}

PixelIndex px(const Blob& b) {
  return {static_cast<std::size_t>(std::lround(b.el_px)), static_cast<std::size_t>(std::lround(b.az_px))};
}

}  // namespace

TEST_CASE("noise floor is the median") {
  PasMap pas{AngularGrid{0, 1, 10, 0, 1, 10}, std::vector<double>(100, 3.5)};
  CHECK(estimate_noise_floor(pas) == 3.5);
  pas.power.assign(100, 1.0);
  pas.power[17] = 1000.0;
  CHECK(estimate_noise_floor(pas) == 1.0);
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n_az = 1 + rng.below(9), n_el = 1 + rng.below(9);
    PasMap r{AngularGrid{0, 1, n_az, 0, 1, n_el}, {}};
    for (std::size_t k = 0; k < r.grid.size(); ++k) r.power.push_back(rng.uniform());
    CHECK(estimate_noise_floor(r) == oracle::median(r.power));
  }
  CHECK_THROWS_AS((void)estimate_noise_floor(PasMap{}), DataError);
}

TEST_CASE("one blob gives one cluster holding its peak") {
  const Blob b{15, 20, 30, 1.5};
  const auto clusters = segment(blob_map(plain_grid(), {b}, 1), SegParams{});
  REQUIRE(clusters.size() == 1);
  CHECK(clusters[0].contains(px(b)));
  CHECK(clusters[0].peak == px(b));
}

TEST_CASE("two separated blobs give two clusters") {
  SegParams p;
  p.marker_min_separation = 2;
  const Blob a{15, 10, 30, 1.0}, b{15, 20, 25, 1.0};
  const auto clusters = segment(blob_map(plain_grid(), {a, b}, 2), p);
  REQUIRE(clusters.size() == 2);
  CHECK(clusters[0].contains(px(a)));
  CHECK(clusters[1].contains(px(b)));
}

TEST_CASE("threshold above every pixel gives no clusters") {
  SegParams p;
  p.foreground_threshold_db = 60.0;
  CHECK(segment(blob_map(plain_grid(), {{15, 20, 30, 1.5}}, 3), p).empty());
  CHECK(segment(blob_map(plain_grid(), {}, 3), SegParams{}).empty());
}

TEST_CASE("clusters satisfy the structural invariants") {
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Blob> blobs;
    const std::size_t k = 1 + rng.below(6);
    for (std::size_t b = 0; b < k; ++b) {
      blobs.push_back({rng.uniform(2, 27), rng.uniform(2, 37), rng.uniform(12, 35), rng.uniform(0.5, 2.5)});
    }
    const PasMap pas = blob_map(plain_grid(), blobs, 100 + trial);
    SegParams p;
    p.min_pixels = 1;
    const auto clusters = segment(pas, p);
    std::set<PixelIndex> seen;
    double last_power = INFINITY;
    const auto comp = mask_components(pas, p.foreground_threshold_db);
    std::size_t labelled = 0;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      const Cluster& cl = clusters[c];
      CHECK(cl.id == static_cast<int>(c));
      REQUIRE_FALSE(cl.pixels.empty());
      CHECK(std::is_sorted(cl.pixels.begin(), cl.pixels.end()));
      CHECK(eight_connected(cl));
      CHECK(cl.total_power <= last_power);
      last_power = cl.total_power;
      double best = 0;
      std::set<int> comps;
      for (const auto& q : cl.pixels) {
        CHECK(seen.insert(q).second);
        best = std::max(best, pas.at(q));
        comps.insert(comp[pas.grid.flat(q)]);
      }
      CHECK(pas.at(cl.peak) == best);
      CHECK(comps.size() == 1);
      CHECK(*comps.begin() >= 0);
      labelled += cl.pixels.size();
    }
    // With min_pixels = 1 the clusters partition the foreground exactly.
    CHECK(labelled == static_cast<std::size_t>(std::count_if(comp.begin(), comp.end(), [](int v) { return v >= 0; })));
  }
}

TEST_CASE("segmentation is invariant under positive scaling") {
  const PasMap pas = blob_map(plain_grid(), {{10, 10, 28, 1.2}, {20, 30, 22, 1.8}}, 4);
  PasMap scaled = pas;
  for (double& v : scaled.power) v *= 1e-7;
  const auto a = segment(pas, SegParams{});
  const auto b = segment(scaled, SegParams{});
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].pixels == b[k].pixels);
}

TEST_CASE("azimuth wraps on a full-circle grid") {
  const AngularGrid g{-180.0, 5.0, 73, -45.0, 5.0, 28};
  // Blob centered on the +-180 seam.
  const PasMap pas = blob_map(g, {{9, 0, 30, 1.2}}, 5);
  const auto clusters = segment(pas, SegParams{});
  REQUIRE(clusters.size() == 1);
  bool left = false, right = false;
  for (const auto& q : clusters[0].pixels) {
    left = left || q.az <= 2;
    right = right || q.az >= 70;
  }
  CHECK(left);
  CHECK(right);
}

TEST_CASE("grid-dependent defaults") {
  const SegParams fine = SegParams::for_grid(1.0, 5.0);
  CHECK(fine.min_pixels == 4);
  CHECK(fine.marker_min_separation == 5);
  CHECK(fine.smoothing_radius == 1);
  const SegParams coarse = SegParams::for_grid(5.0, 5.0);
  CHECK(coarse.min_pixels == 2);
  CHECK(coarse.marker_min_separation == 1);
  CHECK(coarse.smoothing_radius == 0);
  CHECK(coarse.foreground_threshold_db == 10.0);
}

TEST_CASE("invalid parameters are config errors") {
  SegParams p;
  p.foreground_threshold_db = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = SegParams{};
  p.min_pixels = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("truth labeling") {
  const AngularGrid g{-20.0, 1.0, 41, -10.0, 1.0, 21};
  const PasMap pas = blob_map(g, {{10, 20, 30, 1.2}, {5, 5, 27, 1.2}, {15, 33, 24, 1.2}}, 6);
  auto clusters = segment(pas, SegParams{});
  REQUIRE(clusters.size() == 3);

  SUBCASE("LOS inside one cluster") {
    GroundTruth t{true, 0.0, 0.0, 2};  // pixel (10, 20)
    const TruthLabeling lab = label_clusters_with_truth(clusters, g, t);
    CHECK_FALSE(lab.los_missed);
    REQUIRE(lab.los_cluster_id);
    int n_los = 0;
    for (const auto& c : clusters) {
      REQUIRE(c.truth);
      if (*c.truth == PathKind::kLos) {
        ++n_los;
        CHECK(c.id == *lab.los_cluster_id);
        CHECK(c.contains({10, 20}));
      }
    }
    CHECK(n_los == 1);
  }
  SUBCASE("no LOS") {
    const TruthLabeling lab = label_clusters_with_truth(clusters, g, GroundTruth{false, 0, 0, 3});
    CHECK_FALSE(lab.los_missed);
    for (const auto& c : clusters) CHECK(c.truth == PathKind::kNlos);
  }
  SUBCASE("LOS in the background") {
    const TruthLabeling lab = label_clusters_with_truth(clusters, g, GroundTruth{true, -18.0, 8.0, 3});
    CHECK(lab.los_missed);
    CHECK_FALSE(lab.los_cluster_id);
    for (const auto& c : clusters) CHECK(c.truth == PathKind::kNlos);
  }
}
