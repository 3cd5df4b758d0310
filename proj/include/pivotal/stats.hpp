// Copyright 2026 The pivotal authors
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

#include <cstdint>
#include <vector>

namespace pivotal::stats {

struct TestResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

// Pearson goodness of fit. Trailing bins are pooled until every bin has
// expected count >= min_expected; probs need not sum to 1 (the remainder is
// an extra tail bin).
TestResult chi_square_gof(const std::vector<double>& observed,
                          const std::vector<double>& probs,
                          double min_expected = 5.0);

// Homogeneity of two count vectors over the same bins (pooling sparse tail
// bins as above).
TestResult chi_square_homogeneity(const std::vector<double>& a,
                                  const std::vector<double>& b,
                                  double min_expected = 5.0);

// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov law.
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Survival function of the Kolmogorov distribution.
double kolmogorov_q(double lambda);

double chi_square_sf(double x, double dof);

double mean(const std::vector<double>& x);
double variance(const std::vector<double>& x);
double quantile(std::vector<double> x, double q);
double median(std::vector<double> x);
double autocorrelation(const std::vector<double>& x, int lag);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

Interval wilson(double successes, double n, double z = 1.959963984540054);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  int n = 0;
};

LinearFit ols(const std::vector<double>& x, const std::vector<double>& y);

// Percentile bootstrap CI of the mean; resampling keyed by seed.
Interval bootstrap_mean_ci(const std::vector<double>& x, int resamples,
                           uint64_t seed, double level = 0.95);

struct TailFit {
  double rate = 0.0;  // minus the slope of log P(X >= t)
  Interval ci;
  int points = 0;
  uint64_t t_lo = 0;
  uint64_t t_hi = 0;
};

// Exponential tail rate of integer samples: OLS of log P(X >= t) over the
// observed values t with P(X >= t) in [p_lo, p_hi], and a percentile bootstrap
// CI with that window held fixed. NaN rate when fewer than 3 points qualify.
TailFit exponential_tail(const std::vector<uint64_t>& x, int resamples, uint64_t seed,
                         double p_lo = 1e-3, double p_hi = 0.3);

}  // namespace pivotal::stats
