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

#include "nlosid/grid.hpp"

#include <cmath>
#include <string>

#include "nlosid/error.hpp"

namespace nlosid {

void AngularGrid::validate() const {
  if (!(az_step > 0.0) || !(el_step > 0.0) || !std::isfinite(az_step) || !std::isfinite(el_step)) {
    throw ConfigError("angular grid steps must be positive and finite");
  }
  if (n_az < 1 || n_el < 1) throw ConfigError("angular grid needs at least one pixel per axis");
  if (!std::isfinite(az_start) || !std::isfinite(el_start)) {
    throw ConfigError("angular grid origin must be finite");
  }
}

std::optional<PixelIndex> AngularGrid::nearest(double az, double el) const noexcept {
  const double fi = (el - el_start) / el_step;
  const long i = std::lround(fi);
  if (i < 0 || i >= static_cast<long>(n_el)) return std::nullopt;

  double fj = (az - az_start) / az_step;
  if (az_wraps()) {
    const double period = static_cast<double>(az_period());
    fj = std::fmod(fj, period);
    if (fj < -0.5) fj += period;
  }
  long j = std::lround(fj);
  if (az_wraps() && j >= static_cast<long>(az_period())) j -= static_cast<long>(az_period());
  if (j < 0 || j >= static_cast<long>(n_az)) return std::nullopt;
  return PixelIndex{static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
}

}  // namespace nlosid
