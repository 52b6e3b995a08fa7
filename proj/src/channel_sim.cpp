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

#include "nlosid/channel_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nlosid/error.hpp"
#include "nlosid/random.hpp"

namespace nlosid {
namespace {

constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;  // "noise"

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid SimConfig: " + what);
}

bool proper(const Range& r) { return std::isfinite(r.lo) && std::isfinite(r.hi) && r.hi > r.lo; }

// Rayleigh draw with unit mean.
double rayleigh_unit_mean(Rng& rng) {
  constexpr double kSigma = 0.7978845608028654;  // sqrt(2 / pi)
  double u = rng.uniform();
  while (u <= 0.0) u = rng.uniform();
  return kSigma * std::sqrt(-2.0 * std::log(u));
}

}  // namespace

std::string_view to_string(PathKind k) noexcept { return k == PathKind::kLos ? "LOS" : "NLOS"; }

PathKind path_kind_from_string(std::string_view s) {
  if (s == "LOS") return PathKind::kLos;
  if (s == "NLOS") return PathKind::kNlos;
  throw FormatError("unknown path kind '" + std::string(s) + "'");
}

void SimConfig::validate() const {
  require(proper(az_range), "az_range must satisfy lo < hi");
  require(proper(el_range), "el_range must satisfy lo < hi");
  require(step_deg > 0.0 && std::isfinite(step_deg), "step must be positive");
  require(hpbw_az_deg > 0.0 && hpbw_el_deg > 0.0, "hpbw must be positive");
  require(sample_rate_ghz > 0.0 && std::isfinite(sample_rate_ghz), "sample_rate must be positive");
  require(n_taps >= 64, "n_taps must be at least 64");
  require(std::isfinite(snr_db), "snr_db must be finite");
  require(n_nlos_mean >= 1.0, "n_nlos_mean must be at least 1");
  require(rays_per_cluster_mean >= 2.0, "rays_per_cluster_mean must be at least 2");
  require(decay_ns > 0.0, "decay constant must be positive");
  require(ray_arrival_mean_ns > 0.0, "ray arrival mean must be positive");
  require(angular_jitter_deg >= 0.0, "angular jitter must be non-negative");
  require(proper(base_delay_ns) && base_delay_ns.lo >= 0.0, "base_delay range invalid");
  require(base_delay_ns.hi < record_ns(), "base delays must lie inside the delay record");
  require(nlos_gain_db.hi >= nlos_gain_db.lo, "nlos_gain_db range invalid");
  require(los_el_deg.hi >= los_el_deg.lo, "los_el range invalid");
  require(los_companion_db.hi <= -15.0 && los_companion_db.hi >= los_companion_db.lo,
          "LOS companion rays must be at least 15 dB down");
}

AngularGrid SimConfig::grid() const {
  AngularGrid g;
  g.az_start = az_range.lo;
  g.az_step = step_deg;
  g.n_az = static_cast<std::size_t>(std::floor((az_range.hi - az_range.lo) / step_deg + 1e-9)) + 1;
  g.el_start = el_range.lo;
  g.el_step = step_deg;
  g.n_el = static_cast<std::size_t>(std::floor((el_range.hi - el_range.lo) / step_deg + 1e-9)) + 1;
  return g;
}

double beam_gain(double d_az_deg, double d_el_deg, double hpbw_az_deg,
                 double hpbw_el_deg) noexcept {
  const double a = d_az_deg / hpbw_az_deg;
  const double e = d_el_deg / hpbw_el_deg;
  return std::exp(-4.0 * std::numbers::ln2 * (a * a + e * e));
}

Channel generate_channel(const SimConfig& config) {
  config.validate();
  Rng rng(config.seed);
  Channel ch;

  const auto n_nlos = static_cast<std::size_t>(1 + rng.poisson(config.n_nlos_mean - 1.0));
  const std::size_t n_clusters = n_nlos + (config.los_present ? 1 : 0);

  // All base delays come from one uniform draw; the LOS path takes the
  // earliest so every NLOS cluster arrives strictly later.
  std::vector<double> delays(n_clusters);
  for (auto& d : delays) d = rng.uniform(config.base_delay_ns.lo, config.base_delay_ns.hi);
  std::sort(delays.begin(), delays.end());
  const double tap = 1.0 / config.sample_rate_ghz;
  if (config.los_present) {
    for (std::size_t k = 1; k < delays.size(); ++k) {
      if (delays[k] <= delays[0]) delays[k] = delays[0] + tap;
    }
  }

  const double limit = config.record_ns() - tap;
  const double az_lo = config.az_range.lo;
  // On a full-circle sweep both ends are the same direction; draw over one period.
  const double az_hi = config.grid().az_wraps() ? az_lo + 360.0 : config.az_range.hi;
  auto draw_az = [&] { return rng.uniform(az_lo, az_hi); };
  auto az_in_range = [&](double az) {
    if (config.grid().az_wraps()) return wrap_degrees(az);
    return std::clamp(az, config.az_range.lo, config.az_range.hi);
  };

  std::size_t next_delay = 0;
  if (config.los_present) {
    RayCluster los;
    los.kind = PathKind::kLos;
    los.center_az_deg = az_in_range(draw_az());
    Range el_window{std::max(config.los_el_deg.lo, config.el_range.lo),
                    std::min(config.los_el_deg.hi, config.el_range.hi)};
    if (el_window.hi < el_window.lo) el_window = config.el_range;
    los.center_el_deg = rng.uniform(el_window.lo, el_window.hi);
    los.base_delay_ns = delays[next_delay++];
    los.rays.push_back(Ray{0.0, 1.0, rng.uniform(0.0, 2.0 * std::numbers::pi), 0.0, 0.0});
    const auto companions = rng.below(3);
    double offset = 0.0;
    for (std::uint64_t k = 0; k < companions; ++k) {
      offset += rng.exponential(config.ray_arrival_mean_ns) + tap;
      Ray r;
      r.delay_offset_ns = offset;
      r.amplitude = std::pow(10.0, rng.uniform(config.los_companion_db.lo,
                                               config.los_companion_db.hi) / 20.0);
      r.phase_rad = rng.uniform(0.0, 2.0 * std::numbers::pi);
      r.az_offset_deg = rng.normal(0.0, config.angular_jitter_deg);
      r.el_offset_deg = rng.normal(0.0, config.angular_jitter_deg);
      if (los.base_delay_ns + r.delay_offset_ns < limit) los.rays.push_back(r);
    }
    ch.truth.los_present = true;
    ch.truth.los_az_deg = los.center_az_deg;
    ch.truth.los_el_deg = los.center_el_deg;
    ch.clusters.push_back(std::move(los));
  }

  for (std::size_t c = 0; c < n_nlos; ++c) {
    RayCluster cl;
    cl.kind = PathKind::kNlos;
    cl.center_az_deg = az_in_range(draw_az());
    cl.center_el_deg = rng.uniform(config.el_range.lo, config.el_range.hi);
    cl.base_delay_ns = delays[next_delay++];
    const double gain = std::pow(10.0, rng.uniform(config.nlos_gain_db.lo,
                                                   config.nlos_gain_db.hi) / 20.0);
    const auto n_rays =
        static_cast<std::size_t>(2 + rng.poisson(config.rays_per_cluster_mean - 2.0));
    double offset = 0.0;
    for (std::size_t k = 0; k < n_rays; ++k) {
      if (k > 0) offset += rng.exponential(config.ray_arrival_mean_ns) + 1e-6;
      Ray r;
      r.delay_offset_ns = offset;
      r.amplitude = gain * std::exp(-offset / config.decay_ns) * rayleigh_unit_mean(rng);
      r.phase_rad = rng.uniform(0.0, 2.0 * std::numbers::pi);
      r.az_offset_deg = rng.normal(0.0, config.angular_jitter_deg);
      r.el_offset_deg = rng.normal(0.0, config.angular_jitter_deg);
      cl.rays.push_back(r);
    }
    // Keep the record: drop late rays but retain at least two.
    while (cl.rays.size() > 2 && cl.base_delay_ns + cl.rays.back().delay_offset_ns >= limit) {
      cl.rays.pop_back();
    }
    if (cl.base_delay_ns + cl.rays.back().delay_offset_ns >= limit) {
      cl.rays.back().delay_offset_ns = 0.5 * (limit - cl.base_delay_ns);
    }
    if (config.los_present) {
      double strongest = 0.0;
      for (const Ray& r : cl.rays) strongest = std::max(strongest, r.amplitude);
      constexpr double kCeiling = 0.9;
      if (strongest > kCeiling) {
        for (Ray& r : cl.rays) r.amplitude *= kCeiling / strongest;
      }
    }
    ch.clusters.push_back(std::move(cl));
  }
  ch.truth.n_nlos = n_nlos;
  return ch;
}

std::optional<double> noise_sigma(const std::vector<RayCluster>& clusters,
                                  const SimConfig& config) {
  if (!config.noise) return std::nullopt;
  double strongest = 0.0;
  for (const auto& c : clusters) {
    for (const auto& r : c.rays) strongest = std::max(strongest, std::abs(r.amplitude));
  }
  if (strongest <= 0.0) return std::nullopt;
  const double snr = std::pow(10.0, config.snr_db / 10.0);
  return strongest / std::sqrt(2.0 * static_cast<double>(config.n_taps) * snr);
}

CirTensor render_cir(const std::vector<RayCluster>& clusters, const SimConfig& config) {
  config.validate();
  const AngularGrid grid = config.grid();
  CirTensor cir(grid, config.sample_rate_ghz, config.n_taps);

  std::vector<double> az_gain(grid.n_az);
  std::vector<double> el_gain(grid.n_el);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const RayCluster& cl = clusters[c];
    for (std::size_t k = 0; k < cl.rays.size(); ++k) {
      const Ray& ray = cl.rays[k];
      const double delay = cl.base_delay_ns + ray.delay_offset_ns;
      const double bin_f = std::round(delay * config.sample_rate_ghz);
      if (!(delay >= 0.0) || bin_f >= static_cast<double>(config.n_taps)) {
        throw RenderError("cluster " + std::to_string(c) + " ray " + std::to_string(k) +
                          " at " + std::to_string(delay) + " ns lies outside the " +
                          std::to_string(config.record_ns()) + " ns record");
      }
      const auto bin = static_cast<std::size_t>(bin_f);
      const double ray_az = cl.center_az_deg + ray.az_offset_deg;
      const double ray_el = cl.center_el_deg + ray.el_offset_deg;
      // The Gaussian lobe is separable, so amplitude gains factor per axis.
      for (std::size_t j = 0; j < grid.n_az; ++j) {
        const double d = wrap_degrees(grid.az_deg(j) - ray_az);
        az_gain[j] = std::sqrt(beam_gain(d, 0.0, config.hpbw_az_deg, config.hpbw_el_deg));
      }
      for (std::size_t i = 0; i < grid.n_el; ++i) {
        const double d = grid.el_deg(i) - ray_el;
        el_gain[i] = std::sqrt(beam_gain(0.0, d, config.hpbw_az_deg, config.hpbw_el_deg));
      }
      const Complex amp = std::polar(ray.amplitude, ray.phase_rad);
      for (std::size_t i = 0; i < grid.n_el; ++i) {
        if (el_gain[i] == 0.0) continue;
        for (std::size_t j = 0; j < grid.n_az; ++j) {
          const double g = el_gain[i] * az_gain[j];
          if (g == 0.0) continue;
          cir.pixel(i, j)[bin] += amp * g;
        }
      }
    }
  }

  if (const auto sigma = noise_sigma(clusters, config)) {
    Rng rng(derive_seed(config.seed, kNoiseStream));
    for (Complex& v : cir.data()) {
      const double re = rng.normal();
      const double im = rng.normal();
      v += Complex(*sigma * re, *sigma * im);
    }
  }
  return cir;
}

}  // namespace nlosid
