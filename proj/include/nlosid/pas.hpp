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

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "nlosid/grid.hpp"

namespace nlosid {

using Complex = std::complex<double>;

// Complex channel impulse responses for every beam direction of an angular
// sweep, indexed (el, az, tap). Tap spacing is 1 / sample_rate_ghz ns.
class CirTensor {
 public:
  CirTensor() = default;
  CirTensor(AngularGrid grid, double sample_rate_ghz, std::size_t n_taps);

  [[nodiscard]] const AngularGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] double sample_rate_ghz() const noexcept { return sample_rate_ghz_; }
  [[nodiscard]] double tap_spacing_ns() const noexcept { return 1.0 / sample_rate_ghz_; }
  [[nodiscard]] std::size_t n_taps() const noexcept { return n_taps_; }

  [[nodiscard]] std::span<Complex> pixel(std::size_t el, std::size_t az) noexcept {
    return {data_.data() + grid_.flat(el, az) * n_taps_, n_taps_};
  }
  [[nodiscard]] std::span<const Complex> pixel(std::size_t el, std::size_t az) const noexcept {
    return {data_.data() + grid_.flat(el, az) * n_taps_, n_taps_};
  }
  [[nodiscard]] std::span<const Complex> pixel(PixelIndex p) const noexcept {
    return pixel(p.el, p.az);
  }

  [[nodiscard]] std::span<Complex> data() noexcept { return data_; }
  [[nodiscard]] std::span<const Complex> data() const noexcept { return data_; }

  CirTensor& operator*=(Complex c);

  // Rounds every sample to single precision, the resolution of the on-disk
  // c64le format.
  void quantize_to_c64();

  friend bool operator==(const CirTensor&, const CirTensor&) = default;

 private:
  AngularGrid grid_;
  double sample_rate_ghz_ = 7.0;
  std::size_t n_taps_ = 0;
  std::vector<Complex> data_;
};

// Total received power per beam direction.
struct PasMap {
  AngularGrid grid;
  std::vector<double> power;  // row-major by elevation, linear units

  [[nodiscard]] double at(std::size_t el, std::size_t az) const noexcept {
    return power[grid.flat(el, az)];
  }
  [[nodiscard]] double at(PixelIndex p) const noexcept { return power[grid.flat(p)]; }

  friend bool operator==(const PasMap&, const PasMap&) = default;
};

// Uniformly sampled channel frequency response of one beam direction.
struct CfrSlice {
  double f_start_ghz = 0.0;
  double f_step_ghz = 0.0;
  std::vector<Complex> values;

  [[nodiscard]] double frequency(std::size_t k) const noexcept {
    return f_start_ghz + static_cast<double>(k) * f_step_ghz;
  }
};

// Delay-domain counterpart of a CfrSlice.
struct CirSlice {
  double sample_rate_ghz = 0.0;
  std::vector<Complex> taps;
};

enum class Window { kNone, kHann };

// P = sum_taps |c|^2 * dtau over the full record.
[[nodiscard]] PasMap compute_pas(const CirTensor& cir);

// Forward DFT H[k] = sum_n h[n] exp(-j 2 pi k n / N); f_k = k * fs / N.
// Throws DegenerateError for fewer than 8 taps.
[[nodiscard]] CfrSlice cfr_from_cir(std::span<const Complex> taps, double sample_rate_ghz);

// Inverse DFT of a frequency sweep, optionally Hann-windowed first. The tap
// spacing is 1 / (N * f_step). Throws FormatError on a non-uniform grid.
[[nodiscard]] CirSlice cir_from_cfr(const CfrSlice& sweep, Window window);

// Builds a uniform CfrSlice from explicit (frequency, value) samples sorted by
// frequency; throws FormatError when the spacing is not uniform.
[[nodiscard]] CfrSlice make_cfr_slice(std::span<const double> freqs_ghz,
                                      std::span<const Complex> values);

}  // namespace nlosid
