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

#include "nlosid/gev.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "nlosid/error.hpp"
#include "nlosid/random.hpp"

namespace nlosid {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEulerGamma = 0.57721566490153286;

bool gumbel(const GevParams& p) noexcept { return std::abs(p.gamma) < kGumbelThreshold; }

using Point = std::array<double, 3>;  // gamma, log sigma, mu

GevParams to_params(const Point& x) noexcept { return {x[0], x[2], std::exp(x[1])}; }

// Negative total log-likelihood; +inf off the support.
double objective(std::span<const double> z, const Point& x) noexcept {
  const GevParams p = to_params(x);
  if (!std::isfinite(p.sigma) || !(p.sigma > 0.0)) return kInf;
  double total = 0.0;
  for (double v : z) {
    const double lp = gev_logpdf(v, p);
    if (!std::isfinite(lp)) return kInf;
    total += lp;
  }
  return -total;
}

struct Simplex {
  std::array<Point, 4> v;
  std::array<double, 4> f;

  void order() {
    std::array<std::size_t, 4> idx{0, 1, 2, 3};
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    Simplex s = *this;
    for (std::size_t k = 0; k < 4; ++k) {
      v[k] = s.v[idx[k]];
      f[k] = s.f[idx[k]];
    }
  }
};

Point affine(const Point& a, const Point& b, double t) noexcept {
  // a + t * (b - a)
  return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])};
}

// Nelder-Mead with the usual (1, 2, 0.5, 0.5) coefficients. Returns the
// iterations used; the best vertex is never worse than `start`.
std::size_t nelder_mead(std::span<const double> z, Point& start, double& f_start,
                        std::size_t budget, double tol) {
  Simplex s;
  s.v[0] = start;
  s.f[0] = f_start;
  const std::array<double, 3> steps{0.1, 0.1, 0.1 * std::exp(start[1])};
  for (std::size_t k = 0; k < 3; ++k) {
    s.v[k + 1] = start;
    s.v[k + 1][k] += steps[k];
    s.f[k + 1] = objective(z, s.v[k + 1]);
  }
  std::size_t it = 0;
  for (; it < budget; ++it) {
    s.order();
    if (std::isfinite(s.f[3]) && s.f[3] - s.f[0] <= tol * (1.0 + std::abs(s.f[0]))) break;
    Point c{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t d = 0; d < 3; ++d) c[d] += s.v[k][d] / 3.0;
    }
    const Point xr = affine(c, s.v[3], -1.0);
    const double fr = objective(z, xr);
    if (fr < s.f[0]) {
      const Point xe = affine(c, s.v[3], -2.0);
      const double fe = objective(z, xe);
      if (fe < fr) {
        s.v[3] = xe;
        s.f[3] = fe;
      } else {
        s.v[3] = xr;
        s.f[3] = fr;
      }
      continue;
    }
    if (fr < s.f[2]) {
      s.v[3] = xr;
      s.f[3] = fr;
      continue;
    }
    const bool outside = fr < s.f[3];
    const Point xc = outside ? affine(c, xr, 0.5) : affine(c, s.v[3], 0.5);
    const double fc = objective(z, xc);
    if (fc < (outside ? fr : s.f[3])) {
      s.v[3] = xc;
      s.f[3] = fc;
      continue;
    }
    for (std::size_t k = 1; k < 4; ++k) {
      s.v[k] = affine(s.v[0], s.v[k], 0.5);
      s.f[k] = objective(z, s.v[k]);
    }
  }
  s.order();
  if (s.f[0] <= f_start) {
    start = s.v[0];
    f_start = s.f[0];
  }
  return it;
}

}  // namespace

bool gev_in_support(double x, const GevParams& p) noexcept {
  if (gumbel(p)) return std::isfinite(x);
  return 1.0 + p.gamma * (x - p.mu) / p.sigma > 0.0;
}

double gev_pdf(double x, const GevParams& p) noexcept {
  const double z = (x - p.mu) / p.sigma;
  if (gumbel(p)) return std::exp(-std::exp(-z) - z) / p.sigma;
  const double t = 1.0 + p.gamma * z;
  if (!(t > 0.0)) return 0.0;
  const double inv = 1.0 / p.gamma;
  return std::exp(-std::pow(t, -inv)) * std::pow(t, -1.0 - inv) / p.sigma;
}

double gev_logpdf(double x, const GevParams& p) noexcept {
  const double z = (x - p.mu) / p.sigma;
  if (gumbel(p)) return -std::log(p.sigma) - z - std::exp(-z);
  const double t = 1.0 + p.gamma * z;
  if (!(t > 0.0)) return -kInf;
  const double inv = 1.0 / p.gamma;
  const double lt = std::log(t);
  return -std::log(p.sigma) - std::exp(-inv * lt) - (1.0 + inv) * lt;
}

double gev_cdf(double x, const GevParams& p) noexcept {
  const double z = (x - p.mu) / p.sigma;
  if (gumbel(p)) return std::exp(-std::exp(-z));
  const double t = 1.0 + p.gamma * z;
  if (!(t > 0.0)) return p.gamma > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::pow(t, -1.0 / p.gamma));
}

double gev_quantile(double q, const GevParams& p) noexcept {
  const double y = -std::log(q);
  if (gumbel(p)) return p.mu - p.sigma * std::log(y);
  return p.mu + p.sigma * (std::pow(y, -p.gamma) - 1.0) / p.gamma;
}

double gev_loglik(std::span<const double> samples, const GevParams& p) noexcept {
  if (samples.empty()) return 0.0;
  double total = 0.0;
  for (double v : samples) total += gev_logpdf(v, p);
  return total / static_cast<double>(samples.size());
}

GevParams gev_pwm_estimate(std::span<const double> samples) {
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  if (x.size() < 3) throw FitError("PWM estimate needs at least 3 samples");
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double r = static_cast<double>(j);  // rank - 1
    b0 += x[j];
    b1 += r / (n - 1.0) * x[j];
    b2 += r * (r - 1.0) / ((n - 1.0) * (n - 2.0)) * x[j];
  }
  b0 /= n;
  b1 /= n;
  b2 /= n;
  GevParams p;
  const double l2 = 2.0 * b1 - b0;
  const double c = l2 / (3.0 * b2 - b0) - std::log(2.0) / std::log(3.0);
  const double k = 7.8590 * c + 2.9554 * c * c;  // Hosking's k = -gamma
  if (std::abs(k) < 1e-6 || !std::isfinite(k)) {
    p.gamma = 0.0;
    p.sigma = l2 / std::log(2.0);
    p.mu = b0 - kEulerGamma * p.sigma;
    return p;
  }
  const double g = std::tgamma(1.0 + k);
  p.gamma = -k;
  p.sigma = l2 * k / (g * (1.0 - std::pow(2.0, -k)));
  p.mu = b0 + p.sigma * (g - 1.0) / k;
  return p;
}

GevFit gev_fit_mle(std::span<const double> samples, const GevFitOptions& options) {
  if (samples.size() < options.min_samples) {
    throw FitError("GEV fit needs at least " + std::to_string(options.min_samples) +
                   " samples, got " + std::to_string(samples.size()));
  }
  if (samples.size() < 3) throw FitError("GEV fit needs at least 3 samples");
  for (double v : samples) {
    if (!std::isfinite(v)) throw FitError("GEV fit got a non-finite sample");
  }
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double var = 0.0;
  for (double v : samples) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
    throw FitError("GEV fit got degenerate (constant) samples");
  }

  // Work on standardized samples: well conditioned and location-scale
  // equivariant by construction.
  std::vector<double> z(samples.size());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = (samples[k] - mean) / sd;

  GevParams pwm{};
  bool pwm_ok = true;
  try {
    pwm = gev_pwm_estimate(z);
  } catch (const FitError&) {
    pwm_ok = false;
  }
  pwm_ok = pwm_ok && std::isfinite(pwm.gamma) && std::isfinite(pwm.mu) && pwm.sigma > 0.0 &&
           std::isfinite(pwm.sigma);

  const double gumbel_sigma = std::sqrt(6.0) / std::numbers::pi;
  const Point gumbel_start{0.0, std::log(gumbel_sigma), -kEulerGamma * gumbel_sigma};
  Point start = gumbel_start;
  double f_start = objective(z, gumbel_start);
  double f_init = f_start;
  if (pwm_ok) {
    const Point p{pwm.gamma, std::log(pwm.sigma), pwm.mu};
    const double fp = objective(z, p);
    if (std::isfinite(fp)) {
      f_init = fp;
      if (fp <= f_start) {
        start = p;
        f_start = fp;
      }
    }
  }
  if (!std::isfinite(f_start)) {
    throw FitError("GEV fit found no feasible starting point (n=" + std::to_string(z.size()) +
                   ", mean=" + std::to_string(mean) + ", sd=" + std::to_string(sd) + ")");
  }

  // Restart from the incumbent until the simplex stops improving or the
  // iteration budget is spent.
  std::size_t used = 0;
  while (used < options.max_iterations) {
    const double before = f_start;
    used += nelder_mead(z, start, f_start, options.max_iterations - used, options.tolerance) + 1;
    if (before - f_start <= options.tolerance * (1.0 + std::abs(f_start))) break;
  }
  if (!std::isfinite(f_start)) {
    throw FitError("GEV fit diverged (objective " + std::to_string(f_start) + ")");
  }

  const GevParams zp = to_params(start);
  GevFit fit;
  fit.params = {zp.gamma, mean + sd * zp.mu, sd * zp.sigma};
  const double log_jacobian = n * std::log(sd);
  fit.loglik = -f_start - log_jacobian;

  // With gamma < -1 the likelihood is unbounded at the endpoint, so the
  // optimum sits on the extreme sample and undoing the standardization can
  // leave that sample a few ulps outside. Shift the location just enough.
  if (!gumbel(fit.params)) {
    const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    const double extreme = fit.params.gamma < 0.0 ? *hi : *lo;
    bool repaired = false;
    for (int k = 0; k < 64 && !gev_in_support(extreme, fit.params); ++k) {
      const double endpoint = fit.params.mu - fit.params.sigma / fit.params.gamma;
      const double gap = std::abs(extreme - endpoint) +
                         4.0 * std::numeric_limits<double>::epsilon() *
                             std::max({std::abs(extreme), std::abs(fit.params.mu), fit.params.sigma});
      fit.params.mu += fit.params.gamma < 0.0 ? gap : -gap;
      repaired = true;
    }
    if (!gev_in_support(extreme, fit.params)) {
      throw FitError("GEV fit could not place every sample inside the support");
    }
    if (repaired) fit.loglik = gev_loglik(samples, fit.params) * n;
  }
  fit.init_loglik = -f_init - log_jacobian;
  fit.iterations = used;
  return fit;
}

double cdf_rmse(std::span<const double> samples, const GevParams& p) {
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = gev_cdf(x[k], p) - static_cast<double>(k + 1) / (n + 1.0);
    acc += d * d;
  }
  return x.empty() ? 0.0 : std::sqrt(acc / n);
}

std::vector<Partition> bootstrap_split(std::size_t dataset_size, std::size_t n_train,
                                       std::size_t n_test, std::size_t repeats,
                                       std::uint64_t seed) {
  if (n_train + n_test > dataset_size) {
    throw ConfigError("bootstrap sizes " + std::to_string(n_train) + " + " +
                      std::to_string(n_test) + " exceed the dataset size " +
                      std::to_string(dataset_size));
  }
  if (n_train == 0 || n_test == 0 || repeats == 0) {
    throw ConfigError("bootstrap needs non-empty train and test sets and at least one repeat");
  }
  std::vector<Partition> out;
  out.reserve(repeats);
  std::vector<std::size_t> idx(dataset_size);
  for (std::size_t r = 0; r < repeats; ++r) {
    Rng rng(derive_seed(seed, r));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t take = n_train + n_test;
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(dataset_size - k));
      std::swap(idx[k], idx[j]);
    }
    Partition p;
    p.train.assign(idx.begin(), idx.begin() + static_cast<long>(n_train));
    p.test.assign(idx.begin() + static_cast<long>(n_train), idx.begin() + static_cast<long>(take));
    std::sort(p.train.begin(), p.train.end());
    std::sort(p.test.begin(), p.test.end());
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace nlosid
