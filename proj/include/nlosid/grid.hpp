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

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>

namespace nlosid {

// Wraps an angle difference in degrees into (-180, 180].
inline double wrap_degrees(double d) noexcept {
  double w = std::fmod(d, 360.0);
  if (w <= -180.0) w += 360.0;
  if (w > 180.0) w -= 360.0;
  return w;
}

struct PixelIndex {
  std::size_t el = 0;
  std::size_t az = 0;

  friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
  friend auto operator<=>(const PixelIndex&, const PixelIndex&) = default;
};

// Regular elevation x azimuth sampling grid. Pixel (i, j) sits at
// (el_start + i * el_step, az_start + j * az_step); storage is row-major by
// elevation.
struct AngularGrid {
  double az_start = -180.0;
  double az_step = 5.0;
  std::size_t n_az = 73;
  double el_start = -45.0;
  double el_step = 5.0;
  std::size_t n_el = 28;

  // Throws ConfigError when steps or counts are invalid.
  void validate() const;

  [[nodiscard]] std::size_t size() const noexcept { return n_az * n_el; }
  [[nodiscard]] std::size_t flat(std::size_t el, std::size_t az) const noexcept {
    return el * n_az + az;
  }
  [[nodiscard]] std::size_t flat(PixelIndex p) const noexcept { return flat(p.el, p.az); }
  [[nodiscard]] PixelIndex unflat(std::size_t k) const noexcept { return {k / n_az, k % n_az}; }

  [[nodiscard]] double az_deg(std::size_t j) const noexcept {
    return az_start + static_cast<double>(j) * az_step;
  }
  [[nodiscard]] double el_deg(std::size_t i) const noexcept {
    return el_start + static_cast<double>(i) * el_step;
  }

  [[nodiscard]] double az_end() const noexcept { return az_deg(n_az - 1); }
  [[nodiscard]] double el_end() const noexcept { return el_deg(n_el - 1); }

  // True when the azimuth samples cover the full circle, so the axis wraps.
  [[nodiscard]] bool az_wraps() const noexcept {
    return static_cast<double>(n_az) * az_step >= 360.0 - 1e-9 * az_step;
  }

  // Number of distinct azimuth directions before the axis repeats; a grid
  // sampling both -180 and +180 has one duplicated column.
  [[nodiscard]] std::size_t az_period() const noexcept {
    return az_wraps() ? static_cast<std::size_t>(std::lround(360.0 / az_step)) : n_az;
  }

  // Signed azimuth distance in columns from a to b, honoring wrap-around.
  [[nodiscard]] long az_delta(std::size_t a, std::size_t b) const noexcept {
    long d = static_cast<long>(b) - static_cast<long>(a);
    if (az_wraps()) {
      const long period = static_cast<long>(az_period());
      d %= period;
      if (d > period / 2) d -= period;
      if (d < -period / 2) d += period;
    }
    return d;
  }

  // Nearest pixel to a direction; nullopt when it lies outside the grid by
  // more than half a step.
  [[nodiscard]] std::optional<PixelIndex> nearest(double az, double el) const noexcept;

  friend bool operator==(const AngularGrid&, const AngularGrid&) = default;
};

}  // namespace nlosid
