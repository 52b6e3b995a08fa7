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

#include <cmath>
#include <numbers>
#include <complex>
#include <vector>

#include "nlosid/error.hpp"
#include "nlosid/pas.hpp"
#include "nlosid/random.hpp"
#include "oracles.hpp"

using namespace nlosid;

namespace {

std::vector<Complex> random_taps(Rng& rng, std::size_t n) {
  std::vector<Complex> v(n);
  for (auto& c : v) c = {rng.normal(), rng.normal()};
  return v;
}

AngularGrid small_grid() { return AngularGrid{-10.0, 5.0, 5, 0.0, 5.0, 3}; }

}  // namespace

TEST_CASE("single unit tap gives power equal to the tap spacing") {
  CirTensor cir(small_grid(), 7.0, 64);
  cir.pixel(1, 2)[0] = 1.0;
  const PasMap pas = compute_pas(cir);
  CHECK(pas.at(1, 2) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
  CHECK(pas.at(0, 0) == 0.0);
}

TEST_CASE("zero tensor gives a zero map") {
  const PasMap pas = compute_pas(CirTensor(small_grid(), 7.0, 64));
  for (double p : pas.power) CHECK(p == 0.0);
}

TEST_CASE("PAS matches a direct double loop") {
  Rng rng(11);
  CirTensor cir(small_grid(), 7.0, 128);
  for (auto& c : cir.data()) c = {rng.normal(), rng.normal()};
  const PasMap pas = compute_pas(cir);
  const auto& g = cir.grid();
  for (std::size_t i = 0; i < g.n_el; ++i) {
    for (std::size_t j = 0; j < g.n_az; ++j) {
      long double want = 0;
      for (const auto& c : cir.pixel(i, j)) want += std::norm(std::complex<long double>(c.real(), c.imag()));
      want /= 7.0L;
      CHECK(oracle::rel_err(pas.at(i, j), want) < 1e-12);
    }
  }
}

TEST_CASE("PAS scales with |c|^2 and ignores per-tap phase") {
  Rng rng(5);
  CirTensor cir(small_grid(), 7.0, 64);
  for (auto& c : cir.data()) c = {rng.normal(), rng.normal()};
  const PasMap base = compute_pas(cir);
  CirTensor scaled = cir;
  scaled *= Complex(0.0, 3.0);
  CirTensor rotated = cir;
  for (auto& c : rotated.data()) c *= std::polar(1.0, rng.uniform(0.0, 6.283));
  const PasMap ps = compute_pas(scaled);
  const PasMap pr = compute_pas(rotated);
  for (std::size_t k = 0; k < base.power.size(); ++k) {
    CHECK(ps.power[k] == doctest::Approx(9.0 * base.power[k]).epsilon(1e-12));
    CHECK(pr.power[k] == doctest::Approx(base.power[k]).epsilon(1e-12));
  }
}

TEST_CASE("forward transform matches direct summation") {
  Rng rng(19);
  for (std::size_t n : {8u, 31u, 64u, 200u}) {
    const auto h = random_taps(rng, n);
    const CfrSlice cfr = cfr_from_cir(h, 7.0);
    const auto want = oracle::naive_dft(h);
    REQUIRE(cfr.values.size() == n);
    long double scale = 0;
    for (const auto& w : want) scale = std::max(scale, std::abs(w));
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(std::abs(std::complex<long double>(cfr.values[k].real(), cfr.values[k].imag()) - want[k]) <
            1e-12 * scale);
    }
    CHECK(cfr.f_start_ghz == 0.0);
    CHECK(cfr.f_step_ghz == doctest::Approx(7.0 / static_cast<double>(n)));
  }
}

TEST_CASE("delta tap transforms to a flat spectrum") {
  std::vector<Complex> h(16);
  h[0] = 1.0;
  for (const auto& v : cfr_from_cir(h, 7.0).values) CHECK(std::abs(v) == doctest::Approx(1.0));
}

TEST_CASE("two equal taps sum to 2 at DC") {
  std::vector<Complex> h(32);
  h[0] = 1.0;
  h[4] = 1.0;
  const CfrSlice cfr = cfr_from_cir(h, 7.0);
  CHECK(std::abs(cfr.values[0]) == doctest::Approx(2.0));
  // |H(f)| = 2|cos(pi f k dtau)| with k = 4, dtau = 1/7, f_m = m * 7 / 32.
  for (std::size_t m = 0; m < 32; ++m) {
    const double f = cfr.frequency(m);
    CHECK(std::abs(cfr.values[m]) ==
          doctest::Approx(2.0 * std::abs(std::cos(std::numbers::pi * f * 4.0 / 7.0))).epsilon(1e-12));
  }
}

TEST_CASE("Parseval holds for the unnormalized pair") {
  Rng rng(23);
  const auto h = random_taps(rng, 512);
  const CfrSlice cfr = cfr_from_cir(h, 7.0);
  long double eh = 0, eH = 0;
  for (const auto& c : h) eh += std::norm(c);
  for (const auto& c : cfr.values) eH += std::norm(c);
  CHECK(oracle::rel_err(eH / 512.0L, eh) < 1e-9);
}

TEST_CASE("too few taps is degenerate") {
  std::vector<Complex> h(7, 1.0);
  CHECK_THROWS_AS((void)cfr_from_cir(h, 7.0), DegenerateError);
}

TEST_CASE("inverse transform round-trips without a window") {
  Rng rng(29);
  const auto h = random_taps(rng, 300);
  const CirSlice back = cir_from_cfr(cfr_from_cir(h, 7.0), Window::kNone);
  REQUIRE(back.taps.size() == h.size());
  CHECK(back.sample_rate_ghz == doctest::Approx(7.0).epsilon(1e-12));
  for (std::size_t k = 0; k < h.size(); ++k) CHECK(std::abs(back.taps[k] - h[k]) < 1e-9 * std::abs(h[k]) + 1e-12);
}

TEST_CASE("flat sweep inverts to a single dominant tap at zero delay") {
  for (Window w : {Window::kNone, Window::kHann}) {
    CfrSlice sweep{60.0, 0.01, std::vector<Complex>(64, 1.0)};
    const CirSlice cir = cir_from_cfr(sweep, w);
    std::size_t best = 0;
    for (std::size_t k = 1; k < cir.taps.size(); ++k) {
      if (std::abs(cir.taps[k]) > std::abs(cir.taps[best])) best = k;
    }
    CHECK(best == 0);
    CHECK(std::abs(cir.taps[0]) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("measurement sweep tap spacing") {
  // 752 points at 11.5 MHz: spacing 1 / (752 * 0.0115 GHz) = 0.1156 ns.
  std::vector<double> f(752);
  std::vector<Complex> v(752, 1.0);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = 26.5 + 0.0115 * static_cast<double>(k);
  const CirSlice cir = cir_from_cfr(make_cfr_slice(f, v), Window::kHann);
  CHECK(cir.taps.size() == 752);
  CHECK(1.0 / cir.sample_rate_ghz == doctest::Approx(0.11563).epsilon(1e-4));
  CHECK(std::abs(1.0 / cir.sample_rate_ghz - 0.12) < 0.005);
}

TEST_CASE("non-uniform sweep is a format error") {
  std::vector<double> f{1.0, 1.1, 1.2, 1.35, 1.4, 1.5, 1.6, 1.7};
  std::vector<Complex> v(f.size(), 1.0);
  CHECK_THROWS_AS((void)make_cfr_slice(f, v), FormatError);
}
