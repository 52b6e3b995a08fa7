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

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace nlosid {

// Generalized extreme value distribution with shape gamma, location mu and
// scale sigma > 0. |gamma| < kGumbelThreshold takes the Gumbel branch.
struct GevParams {
  double gamma = 0.0;
  double mu = 0.0;
  double sigma = 1.0;

  friend bool operator==(const GevParams&, const GevParams&) = default;
};

inline constexpr double kGumbelThreshold = 1e-9;

[[nodiscard]] bool gev_in_support(double x, const GevParams& p) noexcept;
[[nodiscard]] double gev_pdf(double x, const GevParams& p) noexcept;
// -inf outside the support.
[[nodiscard]] double gev_logpdf(double x, const GevParams& p) noexcept;
[[nodiscard]] double gev_cdf(double x, const GevParams& p) noexcept;
[[nodiscard]] double gev_quantile(double q, const GevParams& p) noexcept;

// Mean log-density; -inf when any sample lies outside the support.
[[nodiscard]] double gev_loglik(std::span<const double> samples, const GevParams& p) noexcept;

struct GevFitOptions {
  std::size_t min_samples = 20;
  std::size_t max_iterations = 500;
  double tolerance = 1e-10;
};

struct GevFit {
  GevParams params;
  double loglik = 0.0;       // total log-likelihood at params
  double init_loglik = 0.0;  // total log-likelihood of the moment initializer
  std::size_t iterations = 0;
};

// Probability-weighted-moment estimate; the starting point of the MLE.
[[nodiscard]] GevParams gev_pwm_estimate(std::span<const double> samples);

// Maximum-likelihood fit by Nelder-Mead over (gamma, log sigma, mu) on
// standardized samples. Throws FitError.
[[nodiscard]] GevFit gev_fit_mle(std::span<const double> samples,
                                 const GevFitOptions& options = {});

// RMSE between fitted CDF and Weibull plotting positions k / (n + 1).
[[nodiscard]] double cdf_rmse(std::span<const double> samples, const GevParams& p);

struct Partition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Repeated random train/test index draws without replacement, disjoint within
// each repeat. Throws ConfigError when sizes are infeasible.
[[nodiscard]] std::vector<Partition> bootstrap_split(std::size_t dataset_size,
                                                     std::size_t n_train, std::size_t n_test,
                                                     std::size_t repeats, std::uint64_t seed);

}  // namespace nlosid
