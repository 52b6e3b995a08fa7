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

#include "nlosid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "nlosid/error.hpp"

namespace nlosid {
namespace {

constexpr double kDegenerateTol = 1e-12;

struct MagnitudeMoments {
  double mean = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
};

template <typename Range>
MagnitudeMoments magnitude_moments(const Range& values) {
  MagnitudeMoments mm;
  double n = 0.0;
  for (const Complex& v : values) {
    mm.mean += std::abs(v);
    n += 1.0;
  }
  mm.mean /= n;
  for (const Complex& v : values) {
    const double d = std::abs(v) - mm.mean;
    const double d2 = d * d;
    mm.m2 += d2;
    mm.m4 += d2 * d2;
  }
  mm.m2 /= n;
  mm.m4 /= n;
  return mm;
}

template <typename Range>
double kurtosis_of_magnitudes(const Range& values, std::size_t count, const char* what) {
  if (count < 8) {
    throw DegenerateError(std::string(what) + " needs at least 8 samples, got " +
                          std::to_string(count));
  }
  const MagnitudeMoments mm = magnitude_moments(values);
  if (!(mm.m2 > kDegenerateTol * mm.mean * mm.mean) || !std::isfinite(mm.m4)) {
    throw DegenerateError(std::string(what) + ": magnitudes are constant");
  }
  return mm.m4 / (mm.m2 * mm.m2);
}

struct DelayMoments {
  double mean = 0.0;
  double rms = 0.0;
};

DelayMoments delay_moments(std::span<const Complex> taps, double dtau) {
  double energy = 0.0;
  double first = 0.0;
  for (std::size_t n = 0; n < taps.size(); ++n) {
    const double p = std::norm(taps[n]);
    energy += p;
    first += static_cast<double>(n) * dtau * p;
  }
  if (!(energy > 0.0)) throw DegenerateError("delay moments of a zero-energy response");
  DelayMoments dm;
  dm.mean = first / energy;
  double second = 0.0;
  for (std::size_t n = 0; n < taps.size(); ++n) {
    const double d = static_cast<double>(n) * dtau - dm.mean;
    second += d * d * std::norm(taps[n]);
  }
  dm.rms = std::sqrt(second / energy);
  return dm;
}

struct DelayFeatures {
  double k_t = 0.0;
  double k_f = 0.0;
  double tau_mean = 0.0;
  double tau_rms = 0.0;
};

DelayFeatures pixel_features(std::span<const Complex> taps, const CirTensor& cir,
                             const MetricConfig& cfg, double gate_level) {
  DelayFeatures f;
  const CfrSlice cfr = cfr_from_cir(taps, cir.sample_rate_ghz());
  f.k_f = freq_kurtosis(cfr);
  if (cfg.gate) {
    std::vector<Complex> kept;
    std::vector<Complex> zeroed(taps.begin(), taps.end());
    for (std::size_t n = 0; n < taps.size(); ++n) {
      if (std::norm(taps[n]) >= gate_level) {
        kept.push_back(taps[n]);
      } else {
        zeroed[n] = Complex{};
      }
    }
    f.k_t = time_kurtosis(kept);
    const DelayMoments dm = delay_moments(zeroed, cir.tap_spacing_ns());
    f.tau_mean = dm.mean;
    f.tau_rms = dm.rms;
  } else {
    f.k_t = time_kurtosis(taps);
    const DelayMoments dm = delay_moments(taps, cir.tap_spacing_ns());
    f.tau_mean = dm.mean;
    f.tau_rms = dm.rms;
  }
  return f;
}

}  // namespace

std::string_view metric_name(Metric m) noexcept {
  switch (m) {
    case Metric::kRp: return "r_p";
    case Metric::kKt: return "k_t";
    case Metric::kKf: return "k_f";
    case Metric::kTauMean: return "tau_mean";
    case Metric::kTauRms: return "tau_rms";
  }
  return "?";
}

Metric metric_from_name(std::string_view name) {
  for (Metric m : kAllMetrics) {
    if (metric_name(m) == name) return m;
  }
  throw ConfigError("unknown metric '" + std::string(name) + "'");
}

double FeatureVector::get(Metric m) const noexcept {
  switch (m) {
    case Metric::kRp: return r_p;
    case Metric::kKt: return k_t;
    case Metric::kKf: return k_f;
    case Metric::kTauMean: return tau_mean_ns;
    case Metric::kTauRms: return tau_rms_ns;
  }
  return 0.0;
}

void FeatureVector::set(Metric m, double v) noexcept {
  switch (m) {
    case Metric::kRp: r_p = v; break;
    case Metric::kKt: k_t = v; break;
    case Metric::kKf: k_f = v; break;
    case Metric::kTauMean: tau_mean_ns = v; break;
    case Metric::kTauRms: tau_rms_ns = v; break;
  }
}

CoKurtosisMatrix co_kurtosis(const Cluster& cluster, const PasMap& pas, SpreadMode mode) {
  const AngularGrid& g = pas.grid;
  if (cluster.pixels.size() < 3) {
    throw DegenerateError("co-kurtosis needs at least 3 pixels, cluster has " +
                          std::to_string(cluster.pixels.size()));
  }
  std::set<long> az_values;
  std::set<std::size_t> el_values;
  for (const PixelIndex& p : cluster.pixels) {
    az_values.insert(g.az_delta(cluster.peak.az, p.az));
    el_values.insert(p.el);
  }
  if (az_values.size() < 2 || el_values.size() < 2) {
    throw DegenerateError("co-kurtosis needs at least two distinct azimuths and elevations");
  }

  double w = 0.0;
  double mean_az = 0.0;
  double mean_el = 0.0;
  for (const PixelIndex& p : cluster.pixels) {
    const double v = pas.at(p);
    w += v;
    mean_az += v * static_cast<double>(g.az_delta(cluster.peak.az, p.az)) * g.az_step;
    mean_el += v * g.el_deg(p.el);
  }
  if (!(w > 0.0)) throw DegenerateError("cluster carries no power");
  mean_az /= w;
  mean_el /= w;

  double s11 = 0.0, s12 = 0.0, s22 = 0.0, k11 = 0.0, k12 = 0.0, k22 = 0.0;
  for (const PixelIndex& p : cluster.pixels) {
    const double v = pas.at(p) / w;
    const double da = static_cast<double>(g.az_delta(cluster.peak.az, p.az)) * g.az_step - mean_az;
    const double de = g.el_deg(p.el) - mean_el;
    s11 += v * da * da;
    s12 += v * da * de;
    s22 += v * de * de;
    k11 += v * da * da * da * da;
    k12 += v * da * da * de * de;
    k22 += v * de * de * de * de;
  }
  if (s11 < kDegenerateTol * g.az_step * g.az_step ||
      s22 < kDegenerateTol * g.el_step * g.el_step) {
    throw DegenerateError("cluster angular spread is degenerate");
  }
  if (mode == SpreadMode::kCovariance) return {s11, s12, s22};
  return {k11 / (s11 * s11), k12 / (s11 * s22), k22 / (s22 * s22)};
}

double eigen_ratio(const CoKurtosisMatrix& m) {
  if (!std::isfinite(m.rho11) || !std::isfinite(m.rho12) || !std::isfinite(m.rho22)) {
    throw DegenerateError("eigen ratio of a non-finite matrix");
  }
  const double half_trace = 0.5 * (m.rho11 + m.rho22);
  const double half_diff = 0.5 * (m.rho11 - m.rho22);
  const double radius = std::hypot(half_diff, m.rho12);
  const double l1 = half_trace + radius;
  const double l2 = half_trace - radius;
  const double big = std::max(std::abs(l1), std::abs(l2));
  if (!(big > 0.0)) throw DegenerateError("eigen ratio of a zero matrix");
  return std::min(l1, l2) / std::max(l1, l2);
}

double time_kurtosis(std::span<const Complex> taps) {
  return kurtosis_of_magnitudes(taps, taps.size(), "time kurtosis");
}

double freq_kurtosis(const CfrSlice& cfr) {
  return kurtosis_of_magnitudes(cfr.values, cfr.values.size(), "frequency kurtosis");
}

double mean_excess_delay(std::span<const Complex> taps, double tap_spacing_ns) {
  return delay_moments(taps, tap_spacing_ns).mean;
}

double rms_delay_spread(std::span<const Complex> taps, double tap_spacing_ns) {
  return delay_moments(taps, tap_spacing_ns).rms;
}

FeatureVector cluster_features(const Cluster& cluster, const CirTensor& cir, const PasMap& pas,
                               const MetricConfig& cfg) {
  const std::string where = "cluster " + std::to_string(cluster.id) + ": ";
  try {
    FeatureVector fv;
    fv.label = cluster.truth;
    fv.r_p = eigen_ratio(co_kurtosis(cluster, pas, cfg.rp_mode));

    double gate_level = 0.0;
    if (cfg.gate) {
      // Per-tap noise power implied by the PAS floor, +6 dB.
      const double floor = estimate_noise_floor(pas);
      gate_level = floor / (static_cast<double>(cir.n_taps()) * cir.tap_spacing_ns()) *
                   std::pow(10.0, 0.6);
    }

    if (cfg.aggregation == Aggregation::kPeakPixel) {
      const DelayFeatures f = pixel_features(cir.pixel(cluster.peak), cir, cfg, gate_level);
      fv.k_t = f.k_t;
      fv.k_f = f.k_f;
      fv.tau_mean_ns = f.tau_mean;
      fv.tau_rms_ns = f.tau_rms;
      return fv;
    }

    double w = 0.0;
    DelayFeatures acc;
    for (const PixelIndex& p : cluster.pixels) {
      const double v = pas.at(p);
      const DelayFeatures f = pixel_features(cir.pixel(p), cir, cfg, gate_level);
      acc.k_t += v * f.k_t;
      acc.k_f += v * f.k_f;
      acc.tau_mean += v * f.tau_mean;
      acc.tau_rms += v * f.tau_rms;
      w += v;
    }
    if (!(w > 0.0)) throw DegenerateError("cluster carries no power");
    fv.k_t = acc.k_t / w;
    fv.k_f = acc.k_f / w;
    fv.tau_mean_ns = acc.tau_mean / w;
    fv.tau_rms_ns = acc.tau_rms / w;
    return fv;
  } catch (const DegenerateError& e) {
    throw DegenerateError(where + e.what());
  }
}

}  // namespace nlosid
