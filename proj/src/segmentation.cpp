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

#include "nlosid/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <tuple>

#include "nlosid/error.hpp"

namespace nlosid {
namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Neighborhood bookkeeping with optional azimuth wrap-around. On a grid that
// samples both -180 and +180 the duplicated column counts as the same
// direction.
class Topology {
 public:
  explicit Topology(const AngularGrid& g)
      : grid_(g), wraps_(g.az_wraps()), period_(g.az_period()) {}

  // Column reached from column j by an azimuth offset of dj, or kNone.
  [[nodiscard]] std::size_t column(std::size_t j, long dj) const noexcept {
    if (!wraps_) {
      const long t = static_cast<long>(j) + dj;
      return (t < 0 || t >= static_cast<long>(grid_.n_az)) ? kNone : static_cast<std::size_t>(t);
    }
    const long p = static_cast<long>(period_);
    long t = (static_cast<long>(j % period_) + dj) % p;
    if (t < 0) t += p;
    return static_cast<std::size_t>(t);
  }

  // 8-connected neighbors (flat indices), including duplicated columns.
  void neighbors(std::size_t k, std::vector<std::size_t>& out) const {
    out.clear();
    const PixelIndex p = grid_.unflat(k);
    for (long di = -1; di <= 1; ++di) {
      const long ni = static_cast<long>(p.el) + di;
      if (ni < 0 || ni >= static_cast<long>(grid_.n_el)) continue;
      for (long dj = -1; dj <= 1; ++dj) {
        const std::size_t nj = column(p.az, dj);
        if (nj == kNone) continue;
        push(static_cast<std::size_t>(ni), nj, k, out);
        if (wraps_ && nj + period_ < grid_.n_az) push(static_cast<std::size_t>(ni), nj + period_, k, out);
      }
    }
  }

  [[nodiscard]] double distance(std::size_t a, std::size_t b) const noexcept {
    const PixelIndex pa = grid_.unflat(a);
    const PixelIndex pb = grid_.unflat(b);
    const double di = static_cast<double>(pb.el) - static_cast<double>(pa.el);
    const double dj = static_cast<double>(grid_.az_delta(pa.az, pb.az));
    return std::sqrt(di * di + dj * dj);
  }

 private:
  void push(std::size_t i, std::size_t j, std::size_t self, std::vector<std::size_t>& out) const {
    const std::size_t n = grid_.flat(i, j);
    if (n != self) out.push_back(n);
  }

  const AngularGrid& grid_;
  bool wraps_;
  std::size_t period_;
};

using Mask = std::vector<char>;

std::vector<std::pair<long, long>> disc(std::size_t radius) {
  std::vector<std::pair<long, long>> offs;
  const long r = static_cast<long>(radius);
  for (long di = -r; di <= r; ++di) {
    for (long dj = -r; dj <= r; ++dj) {
      if (di * di + dj * dj <= r * r) offs.emplace_back(di, dj);
    }
  }
  return offs;
}

// Grayscale erosion (erode = true) or dilation over the structuring element;
// samples off the elevation edge are ignored.
std::vector<double> morph(const std::vector<double>& in, const AngularGrid& g, const Topology& topo,
                          const std::vector<std::pair<long, long>>& se, bool erode) {
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < g.n_el; ++i) {
    for (std::size_t j = 0; j < g.n_az; ++j) {
      double acc = in[g.flat(i, j)];
      for (const auto& [di, dj] : se) {
        const long ni = static_cast<long>(i) + di;
        if (ni < 0 || ni >= static_cast<long>(g.n_el)) continue;
        const std::size_t nj = topo.column(j, dj);
        if (nj == kNone) continue;
        const double v = in[g.flat(static_cast<std::size_t>(ni), nj)];
        acc = erode ? std::min(acc, v) : std::max(acc, v);
      }
      out[g.flat(i, j)] = acc;
    }
  }
  return out;
}

// Morphological reconstruction by dilation: grows `marker` under `mask`
// (marker <= mask) through 8-connected paths, highest values first.
std::vector<double> reconstruct(std::vector<double> marker, const std::vector<double>& mask,
                                const Topology& topo) {
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item> queue;
  for (std::size_t k = 0; k < marker.size(); ++k) {
    marker[k] = std::min(marker[k], mask[k]);
    queue.emplace(marker[k], k);
  }
  std::vector<std::size_t> nb;
  while (!queue.empty()) {
    const auto [v, k] = queue.top();
    queue.pop();
    if (v < marker[k]) continue;  // stale entry
    topo.neighbors(k, nb);
    for (std::size_t q : nb) {
      const double grown = std::min(v, mask[q]);
      if (grown > marker[q]) {
        marker[q] = grown;
        queue.emplace(grown, q);
      }
    }
  }
  return marker;
}

std::vector<double> negated(std::vector<double> v) {
  for (double& x : v) x = -x;
  return v;
}

struct FloodEntry {
  double value;
  std::size_t el;
  std::size_t az;
  std::size_t seq;
  std::size_t pixel;
  int label;
};

// Highest value first, then (el, az), then insertion order.
struct FloodOrder {
  bool operator()(const FloodEntry& a, const FloodEntry& b) const noexcept {
    return std::tie(b.value, a.el, a.az, a.seq) > std::tie(a.value, b.el, b.az, b.seq);
  }
};

}  // namespace

bool Cluster::contains(PixelIndex p) const {
  return std::binary_search(pixels.begin(), pixels.end(), p);
}

void SegParams::validate() const {
  if (!(foreground_threshold_db > 0.0) || !std::isfinite(foreground_threshold_db)) {
    throw ConfigError("foreground_threshold_db must be positive");
  }
  if (min_pixels < 1) throw ConfigError("min_pixels must be at least 1");
}

SegParams SegParams::for_grid(double step_deg, double hpbw_deg) {
  SegParams p;
  p.min_pixels = step_deg <= 2.0 ? 4 : 2;
  p.marker_min_separation =
      static_cast<std::size_t>(std::max(1.0, std::ceil(hpbw_deg / step_deg - 1e-9)));
  // A disc wider than the beam footprint would erase neighbouring peaks.
  p.smoothing_radius = hpbw_deg / step_deg >= 2.0 - 1e-9 ? 1 : 0;
  return p;
}

double estimate_noise_floor(const PasMap& pas) {
  if (pas.power.empty()) throw DataError("cannot estimate the noise floor of an empty map");
  std::vector<double> v = pas.power;
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
  return 0.5 * (lower + upper);
}

std::vector<Cluster> segment(const PasMap& pas, const SegParams& params) {
  params.validate();
  const AngularGrid& g = pas.grid;
  g.validate();
  if (pas.power.size() != g.size()) throw DataError("PAS size does not match its grid");
  const std::size_t n = g.size();
  const Topology topo(g);

  // 1-2: dB map and threshold relative to the median floor.
  std::vector<double> db(n);
  for (std::size_t k = 0; k < n; ++k) {
    db[k] = 10.0 * std::log10(std::max(pas.power[k], std::numeric_limits<double>::min()));
  }
  const double floor_db =
      10.0 * std::log10(std::max(estimate_noise_floor(pas), std::numeric_limits<double>::min()));
  Mask mask(n, 0);
  for (std::size_t k = 0; k < n; ++k) mask[k] = db[k] >= floor_db + params.foreground_threshold_db;

  if (std::none_of(mask.begin(), mask.end(), [](char c) { return c != 0; })) return {};

  // 3: open then close the dB map, both by reconstruction: ripple maxima
  // narrower than the disc are flattened, but saddles between distinct peaks
  // are never raised. The smoothed map only places markers.
  std::vector<double> smooth = db;
  if (params.smoothing_radius > 0) {
    const auto se = disc(params.smoothing_radius);
    smooth = reconstruct(morph(smooth, g, topo, se, true), smooth, topo);
    smooth = negated(reconstruct(negated(morph(smooth, g, topo, se, false)), negated(smooth), topo));
  }

  // 4: regional maxima (plateaus with no strictly higher masked neighbor).
  std::vector<std::size_t> nb;
  std::vector<char> visited(n, 0);
  std::vector<std::size_t> component(n, kNone);
  struct Maximum {
    std::size_t pixel;
    std::size_t component;
  };
  std::vector<Maximum> maxima;
  std::size_t n_components = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!mask[k] || component[k] != kNone) continue;
    std::vector<std::size_t> stack{k};
    component[k] = n_components;
    while (!stack.empty()) {
      const std::size_t q = stack.back();
      stack.pop_back();
      topo.neighbors(q, nb);
      for (std::size_t r : nb) {
        if (mask[r] && component[r] == kNone) {
          component[r] = n_components;
          stack.push_back(r);
        }
      }
    }
    ++n_components;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!mask[k] || visited[k]) continue;
    std::vector<std::size_t> plateau{k};
    visited[k] = 1;
    bool is_max = true;
    for (std::size_t idx = 0; idx < plateau.size(); ++idx) {
      topo.neighbors(plateau[idx], nb);
      for (std::size_t r : nb) {
        if (!mask[r]) continue;
        if (smooth[r] > smooth[k]) is_max = false;
        if (smooth[r] == smooth[k] && !visited[r]) {
          visited[r] = 1;
          plateau.push_back(r);
        }
      }
    }
    if (!is_max) continue;
    // The marker is the plateau pixel strongest in the raw map.
    std::size_t best = *std::min_element(plateau.begin(), plateau.end());
    for (std::size_t q : plateau) {
      if (db[q] > db[best] || (db[q] == db[best] && q < best)) best = q;
    }
    maxima.push_back({best, component[k]});
  }
  std::sort(maxima.begin(), maxima.end(), [&](const Maximum& a, const Maximum& b) {
    if (smooth[a.pixel] != smooth[b.pixel]) return smooth[a.pixel] > smooth[b.pixel];
    return a.pixel < b.pixel;
  });
  std::vector<std::size_t> markers;
  std::vector<char> component_marked(n_components, 0);
  const double sep = static_cast<double>(params.marker_min_separation);
  for (const Maximum& m : maxima) {
    const bool close = std::any_of(markers.begin(), markers.end(), [&](std::size_t other) {
      return topo.distance(m.pixel, other) < sep;
    });
    if (close) continue;
    markers.push_back(m.pixel);
    component_marked[m.component] = 1;
  }
  // A foreground component whose maxima were all suppressed by a stronger
  // marker elsewhere keeps its own strongest maximum.
  for (const Maximum& m : maxima) {
    if (!component_marked[m.component]) {
      markers.push_back(m.pixel);
      component_marked[m.component] = 1;
    }
  }

  // 5: marker-driven flooding in descending dB order.
  std::vector<int> label(n, -1);
  std::priority_queue<FloodEntry, std::vector<FloodEntry>, FloodOrder> queue;
  std::size_t seq = 0;
  auto push_neighbors = [&](std::size_t k, int lab) {
    topo.neighbors(k, nb);
    for (std::size_t r : nb) {
      if (mask[r] && label[r] < 0) {
        const PixelIndex p = g.unflat(r);
        queue.push({db[r], p.el, p.az, seq++, r, lab});
      }
    }
  };
  for (std::size_t m = 0; m < markers.size(); ++m) label[markers[m]] = static_cast<int>(m);
  for (std::size_t m = 0; m < markers.size(); ++m) push_neighbors(markers[m], static_cast<int>(m));
  while (!queue.empty()) {
    const FloodEntry e = queue.top();
    queue.pop();
    if (label[e.pixel] >= 0) continue;
    label[e.pixel] = e.label;
    push_neighbors(e.pixel, e.label);
  }

  // 6: collect basins, drop small ones, order by power.
  std::vector<Cluster> clusters(markers.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (label[k] >= 0) clusters[static_cast<std::size_t>(label[k])].pixels.push_back(g.unflat(k));
  }
  std::vector<Cluster> out;
  for (Cluster& c : clusters) {
    if (c.pixels.size() < params.min_pixels) continue;
    std::sort(c.pixels.begin(), c.pixels.end());
    double best = -1.0;
    for (const PixelIndex& p : c.pixels) {
      const double v = pas.at(p);
      c.total_power += v;
      if (v > best) {
        best = v;
        c.peak = p;
      }
    }
    double w = 0.0;
    double az_off = 0.0;
    double el = 0.0;
    for (const PixelIndex& p : c.pixels) {
      const double v = pas.at(p);
      w += v;
      az_off += v * static_cast<double>(g.az_delta(c.peak.az, p.az)) * g.az_step;
      el += v * g.el_deg(p.el);
    }
    if (w > 0.0) {
      c.centroid_az_deg = g.az_deg(c.peak.az) + az_off / w;
      if (g.az_wraps()) c.centroid_az_deg = wrap_degrees(c.centroid_az_deg);
      c.centroid_el_deg = el / w;
    } else {
      c.centroid_az_deg = g.az_deg(c.peak.az);
      c.centroid_el_deg = g.el_deg(c.peak.el);
    }
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) {
    if (a.total_power != b.total_power) return a.total_power > b.total_power;
    return a.peak < b.peak;
  });
  for (std::size_t k = 0; k < out.size(); ++k) out[k].id = static_cast<int>(k);
  return out;
}

TruthLabeling label_clusters_with_truth(std::vector<Cluster>& clusters, const AngularGrid& grid,
                                        const GroundTruth& truth) {
  TruthLabeling result;
  for (Cluster& c : clusters) c.truth = PathKind::kNlos;
  if (!truth.los_present) return result;

  std::vector<PixelIndex> candidates;
  if (const auto p = grid.nearest(truth.los_az_deg, truth.los_el_deg)) {
    candidates.push_back(*p);
    if (grid.az_wraps()) {
      const std::size_t period = grid.az_period();
      const std::size_t alias = p->az < period ? p->az + period : p->az - period;
      if (alias < grid.n_az) candidates.push_back({p->el, alias});
    }
  }
  for (Cluster& c : clusters) {
    const bool hit = std::any_of(candidates.begin(), candidates.end(),
                                 [&](const PixelIndex& p) { return c.contains(p); });
    if (hit) {
      c.truth = PathKind::kLos;
      result.los_cluster_id = c.id;
      break;
    }
  }
  result.los_missed = !result.los_cluster_id.has_value();
  return result;
}

}  // namespace nlosid
