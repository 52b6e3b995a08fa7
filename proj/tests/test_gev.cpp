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
#include <numbers>
#include <set>

#include "nlosid/error.hpp"
#include "nlosid/gev.hpp"
#include "nlosid/random.hpp"
#include "oracles.hpp"

using namespace nlosid;

namespace {

// Inverse CDF written out from the distribution definition.
long double oracle_quantile(long double q, long double g, long double mu, long double s) {
  const long double y = -std::log(q);
  if (std::fabs(g) < 1e-9L) return mu - s * std::log(y);
  return mu + s / g * (std::pow(y, -g) - 1);
}

std::vector<double> draws(std::size_t n, const GevParams& p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    v = static_cast<double>(oracle_quantile(u, p.gamma, p.mu, p.sigma));
  }
  return x;
}

GevParams random_params(Rng& rng) {
  return {rng.uniform(-1.5, 0.4), rng.uniform(-50.0, 50.0), std::exp(rng.uniform(-3.0, 3.0))};
}

}  // namespace

TEST_CASE("Gumbel branch at the location") {
  for (double sigma : {0.1, 1.0, 53.5}) {
    const GevParams p{0.0, 2.5, sigma};
    CHECK(std::abs(gev_pdf(2.5, p) - std::exp(-1.0) / sigma) <= 1e-12 / sigma);
    CHECK(std::abs(gev_cdf(2.5, p) - std::exp(-1.0)) <= 1e-12);
  }
  // Below the threshold the Gumbel branch is used and matches the limit.
  const GevParams tiny{1e-10, 0.0, 1.0};
  CHECK(gev_pdf(0.7, tiny) == doctest::Approx(static_cast<double>(oracle::gev_pdf(0.7L, 0, 0, 1))));
}

TEST_CASE("density at the LOS r_p parameters") {
  const GevParams los{-1.363, 0.9579, 0.0574};
  CHECK(gev_pdf(0.95, los) == doctest::Approx(5.35).epsilon(0.001));
  CHECK(gev_pdf(0.95, los) ==
        doctest::Approx(static_cast<double>(oracle::gev_pdf(0.95L, -1.363L, 0.9579L, 0.0574L)))
            .epsilon(1e-12));
}

TEST_CASE("values outside the support") {
  const GevParams upper{-0.5, 0.0, 1.0};  // support x < 2
  CHECK_FALSE(gev_in_support(2.5, upper));
  CHECK(gev_pdf(2.5, upper) == 0.0);
  CHECK(gev_cdf(2.5, upper) == 1.0);
  CHECK(gev_logpdf(2.5, upper) == -INFINITY);
  const GevParams lower{0.5, 0.0, 1.0};  // support x > -2
  CHECK(gev_pdf(-3.0, lower) == 0.0);
  CHECK(gev_cdf(-3.0, lower) == 0.0);
  CHECK(gev_in_support(-1.9, lower));
}

TEST_CASE("cdf is non-decreasing") {
  Rng rng(11);
  for (int k = 0; k < 1000; ++k) {
    const GevParams p = random_params(rng);
    double a = rng.uniform(-100.0, 100.0), b = rng.uniform(-100.0, 100.0);
    if (a > b) std::swap(a, b);
    CHECK(gev_cdf(a, p) <= gev_cdf(b, p));
  }
}

TEST_CASE("pdf, logpdf, cdf and quantile agree with the formula") {
  Rng rng(12);
  for (int k = 0; k < 500; ++k) {
    const GevParams p = random_params(rng);
    const double q = rng.uniform(1e-6, 1.0 - 1e-6);
    const double x = static_cast<double>(oracle_quantile(q, p.gamma, p.mu, p.sigma));
    CHECK(gev_quantile(q, p) == doctest::Approx(x).epsilon(1e-9));
    CHECK(gev_cdf(x, p) == doctest::Approx(q).epsilon(1e-9));
    const double want = static_cast<double>(oracle::gev_pdf(x, p.gamma, p.mu, p.sigma));
    CHECK(gev_pdf(x, p) == doctest::Approx(want).epsilon(1e-9));
    CHECK(gev_logpdf(x, p) == doctest::Approx(std::log(want)).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("pdf integrates to one") {
  Rng rng(13);
  for (int k = 0; k < 50; ++k) {
    const GevParams p = random_params(rng);
    const long double lo = oracle_quantile(1e-12L, p.gamma, p.mu, p.sigma);
    const long double hi = oracle_quantile(1.0L - 1e-10L, p.gamma, p.mu, p.sigma);
    const long double mass = oracle::simpson(
        [&](long double x) { return static_cast<long double>(gev_pdf(static_cast<double>(x), p)); },
        lo, hi, 1e-11L);
    CHECK(std::abs(static_cast<double>(mass) - 1.0) < 1e-6);
  }
}

TEST_CASE("cdf derivative matches pdf") {
  Rng rng(14);
  for (int k = 0; k < 500; ++k) {
    const GevParams p = random_params(rng);
    const double x = static_cast<double>(oracle_quantile(rng.uniform(0.01, 0.99), p.gamma, p.mu, p.sigma));
    const double h = 1e-5 * p.sigma;
    const double fd = (gev_cdf(x + h, p) - gev_cdf(x - h, p)) / (2.0 * h);
    CHECK(oracle::rel_err(fd, gev_pdf(x, p)) < 1e-6);
  }
}

TEST_CASE("maximum likelihood recovers generating parameters") {
  const GevParams truth{-0.21, 318.9, 53.5};
  const auto x = draws(2000, truth, 2021);
  const GevFit fit = gev_fit_mle(x);
  CHECK(std::abs(fit.params.mu - truth.mu) < 0.1 * truth.mu);
  CHECK(std::abs(fit.params.sigma - truth.sigma) < 0.1 * truth.sigma);
  CHECK(std::abs(fit.params.gamma - truth.gamma) < 0.15);
  CHECK(fit.loglik >= fit.init_loglik);
  CHECK(fit.loglik == doctest::Approx(gev_loglik(x, fit.params) * 2000.0).epsilon(1e-9));
  CHECK(cdf_rmse(x, fit.params) < 0.05);
  const GevFit again = gev_fit_mle(x);
  CHECK(again.params == fit.params);
}

TEST_CASE("Gumbel draws give a near-zero shape") {
  const auto x = draws(2000, {0.0, -3.0, 2.0}, 7);
  CHECK(std::abs(gev_fit_mle(x).params.gamma) < 0.1);
}

TEST_CASE("every sample stays inside the fitted support") {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const GevParams p = random_params(rng);
    const auto x = draws(100, p, 100 + trial);
    const GevFit fit = gev_fit_mle(x);
    for (double v : x) CHECK(gev_in_support(v, fit.params));
    CHECK(fit.loglik >= fit.init_loglik);
  }
}

TEST_CASE("degenerate fits throw") {
  CHECK_THROWS_AS((void)gev_fit_mle(std::vector<double>(50, 3.0)), FitError);
  CHECK_THROWS_AS((void)gev_fit_mle(std::vector<double>(10, 1.0)), FitError);
  std::vector<double> with_nan = draws(40, {0, 0, 1}, 3);
  with_nan[5] = NAN;
  CHECK_THROWS_AS((void)gev_fit_mle(with_nan), FitError);
}

TEST_CASE("fit is location-scale equivariant") {
  const auto x = draws(500, {-0.3, 1.0, 0.5}, 16);
  std::vector<double> y(x.size());
  const double a = 3.7, b = -120.0;
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = a * x[k] + b;
  const GevParams px = gev_fit_mle(x).params;
  const GevParams py = gev_fit_mle(y).params;
  CHECK(py.gamma == doctest::Approx(px.gamma).epsilon(1e-6));
  CHECK(py.mu == doctest::Approx(a * px.mu + b).epsilon(1e-6));
  CHECK(py.sigma == doctest::Approx(a * px.sigma).epsilon(1e-6));
}

TEST_CASE("cdf rmse") {
  const GevParams p{-0.2, 10.0, 2.0};
  std::vector<double> exact;
  const std::size_t n = 99;
  for (std::size_t k = 1; k <= n; ++k) {
    exact.push_back(static_cast<double>(
        oracle_quantile(static_cast<long double>(k) / (n + 1), p.gamma, p.mu, p.sigma)));
  }
  std::reverse(exact.begin(), exact.end());
  CHECK(cdf_rmse(exact, p) < 1e-12);

  const auto x = draws(2000, p, 17);
  const GevParams wide{p.gamma, p.mu, p.sigma * 10.0};
  CHECK(cdf_rmse(x, wide) > 0.1);

  // Independent evaluation of the plotting-position formula.
  std::vector<double> s = x;
  std::sort(s.begin(), s.end());
  long double acc = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const long double d = oracle::gev_cdf(s[k], p.gamma, p.mu, p.sigma) -
                          static_cast<long double>(k + 1) / (s.size() + 1);
    acc += d * d;
  }
  CHECK(oracle::rel_err(cdf_rmse(x, p), std::sqrt(acc / s.size())) < 1e-9);
}

TEST_CASE("bootstrap partitions") {
  const auto parts = bootstrap_split(100, 30, 20, 10, 99);
  REQUIRE(parts.size() == 10);
  for (const auto& p : parts) {
    CHECK(p.train.size() == 30);
    CHECK(p.test.size() == 20);
    std::set<std::size_t> all(p.train.begin(), p.train.end());
    CHECK(all.size() == 30);
    for (std::size_t t : p.test) {
      CHECK(t < 100);
      CHECK(all.insert(t).second);
    }
  }
  CHECK(parts[0].train != parts[1].train);

  const auto full = bootstrap_split(10, 6, 4, 3, 5);
  for (const auto& p : full) {
    std::vector<std::size_t> u = p.train;
    u.insert(u.end(), p.test.begin(), p.test.end());
    std::sort(u.begin(), u.end());
    for (std::size_t k = 0; k < 10; ++k) CHECK(u[k] == k);
  }

  CHECK(bootstrap_split(100, 30, 20, 10, 99)[3].test == parts[3].test);
  CHECK(bootstrap_split(100, 30, 20, 10, 100)[0].train != parts[0].train);
  CHECK_THROWS_AS((void)bootstrap_split(40, 30, 20, 1, 1), ConfigError);
  CHECK_THROWS_AS((void)bootstrap_split(40, 0, 20, 1, 1), ConfigError);
}
