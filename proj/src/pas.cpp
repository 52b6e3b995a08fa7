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

#include "nlosid/pas.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "nlosid/error.hpp"

namespace nlosid {
namespace {

// FFTW planning is not thread-safe; execution on a private plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void dft(std::vector<Complex>& buf, int sign) {
  const int n = static_cast<int>(buf.size());
  auto* io = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_plan plan = nullptr;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(n, io, io, sign, FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw NumericalError("FFTW failed to create a plan of size " + std::to_string(n));
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace

CirTensor::CirTensor(AngularGrid grid, double sample_rate_ghz, std::size_t n_taps)
    : grid_(grid), sample_rate_ghz_(sample_rate_ghz), n_taps_(n_taps) {
  grid_.validate();
  if (!(sample_rate_ghz > 0.0)) throw ConfigError("sample rate must be positive");
  data_.assign(grid_.size() * n_taps_, Complex{});
}

CirTensor& CirTensor::operator*=(Complex c) {
  for (auto& v : data_) v *= c;
  return *this;
}

void CirTensor::quantize_to_c64() {
  for (auto& v : data_) {
    v = Complex(static_cast<double>(static_cast<float>(v.real())),
                static_cast<double>(static_cast<float>(v.imag())));
  }
}

PasMap compute_pas(const CirTensor& cir) {
  PasMap pas{cir.grid(), std::vector<double>(cir.grid().size(), 0.0)};
  const double dtau = cir.tap_spacing_ns();
  for (std::size_t i = 0; i < cir.grid().n_el; ++i) {
    for (std::size_t j = 0; j < cir.grid().n_az; ++j) {
      double energy = 0.0;
      for (const Complex& c : cir.pixel(i, j)) energy += std::norm(c);
      pas.power[cir.grid().flat(i, j)] = energy * dtau;
    }
  }
  return pas;
}

CfrSlice cfr_from_cir(std::span<const Complex> taps, double sample_rate_ghz) {
  if (taps.size() < 8) {
    throw DegenerateError("CFR needs at least 8 taps, got " + std::to_string(taps.size()));
  }
  CfrSlice out;
  out.f_start_ghz = 0.0;
  out.f_step_ghz = sample_rate_ghz / static_cast<double>(taps.size());
  out.values.assign(taps.begin(), taps.end());
  dft(out.values, FFTW_FORWARD);
  return out;
}

CirSlice cir_from_cfr(const CfrSlice& sweep, Window window) {
  const std::size_t n = sweep.values.size();
  if (n < 2) throw FormatError("frequency sweep needs at least 2 points");
  if (!(sweep.f_step_ghz > 0.0) || !std::isfinite(sweep.f_step_ghz)) {
    throw FormatError("frequency sweep spacing must be positive");
  }
  CirSlice out;
  out.sample_rate_ghz = static_cast<double>(n) * sweep.f_step_ghz;
  out.taps = sweep.values;
  if (window == Window::kHann) {
    // Periodic-sum normalization keeps the coherent gain at 1.
    std::vector<double> w(n);
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      w[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                   static_cast<double>(n - 1)));
      sum += w[k];
    }
    const double norm = static_cast<double>(n) / sum;
    for (std::size_t k = 0; k < n; ++k) out.taps[k] *= w[k] * norm;
  }
  dft(out.taps, FFTW_BACKWARD);
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& t : out.taps) t *= inv;
  return out;
}

CfrSlice make_cfr_slice(std::span<const double> freqs_ghz, std::span<const Complex> values) {
  if (freqs_ghz.size() != values.size()) throw FormatError("frequency / value count mismatch");
  if (freqs_ghz.size() < 2) throw FormatError("frequency sweep needs at least 2 points");
  const double step = (freqs_ghz.back() - freqs_ghz.front()) /
                      static_cast<double>(freqs_ghz.size() - 1);
  if (!(step > 0.0)) throw FormatError("frequency sweep must be strictly increasing");
  for (std::size_t k = 1; k < freqs_ghz.size(); ++k) {
    const double d = freqs_ghz[k] - freqs_ghz[k - 1];
    if (std::abs(d - step) > 1e-6 * step) {
      throw FormatError("non-uniform frequency grid at " + std::to_string(freqs_ghz[k]) + " GHz");
    }
  }
  CfrSlice out;
  out.f_start_ghz = freqs_ghz.front();
  out.f_step_ghz = step;
  out.values.assign(values.begin(), values.end());
  return out;
}

}  // namespace nlosid
