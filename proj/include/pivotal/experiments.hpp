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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pivotal/fixtures.hpp"
#include "pivotal/linalg.hpp"

namespace pivotal::exp {

struct ExperimentOptions {
  uint64_t seed = 1;
  long trajectories = 200;
  long steps = 2000;
  int threads = 1;
  int bootstrap = 1000;
  // Evenly spaced checkpoints beyond the dense head (every n <= 20).
  int points = 100;
};

// One row of a curve CSV.
struct CurvePoint {
  long n = 0;
  std::string statistic;
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct Curve {
  std::string name;
  std::vector<CurvePoint> rows;
};

struct Rate {
  std::string name;
  double value = 0.0;  // decay rate: minus the fitted slope
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  long window_lo = 0;
  long window_hi = 0;
  int points = 0;
};

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ExperimentReport {
  std::string experiment;
  DistributionSpec spec;
  bool has_spec = true;
  uint64_t seed = 0;
  long n_traj = 0;
  long n_steps = 0;
  std::vector<Curve> curves;
  std::vector<Rate> rates;
  std::vector<std::pair<std::string, double>> scalars;
  std::vector<Check> checks;
  long excluded = 0;
  long deferred = 0;
  double wall_seconds = 0.0;

  bool passed() const;
  double scalar(const std::string& key) const;
  const Rate& rate(const std::string& name) const;
  const Check& check(const std::string& name) const;
  const Curve& curve(const std::string& name) const;
};

// Wall time is left out unless asked for, so that regenerated reports are
// byte-identical.
std::string report_json(const ExperimentReport& r, bool include_timing = false);
std::string curve_csv(const Curve& c);

// ---------------------------------------------------------------------------
// Log-scaled product gamma_0 ... gamma_{n-1}.

class Walk {
 public:
  explicit Walk(int dim);
  void step(const DistributionSpec::Draw& x);

  int dim() const { return d_; }
  long n() const { return n_; }
  const Mat& unit() const { return g_; }  // product / ||product||
  double log_norm() const { return l_; }
  // log(s1 s2) of the product.
  double log_wedge() const { return lw_; }
  double log_sigma() const;
  bool zero() const { return zero_; }
  int rank() const;
  // log ||product x||, -inf when it vanishes.
  double log_image(const std::vector<double>& x) const;
  // log of the projective distance between the images of x and y, computed
  // through the second exterior power (no underflow).
  double log_image_dist(const std::vector<double>& x,
                        const std::vector<double>& y) const;
  // Sign of (product x) ^ (product y) for d = 2 (0 when it vanishes).
  int image_orientation(const std::vector<double>& x,
                        const std::vector<double>& y) const;

 private:
  int d_;
  long n_ = 0;
  Mat g_;
  double l_ = 0.0;
  Mat w_;  // normalized second exterior power, d > 2 only
  double lw_ = 0.0;
  int det_sign_ = 1;
  bool zero_ = false;
};

// Checkpoints 0..min(20, steps) followed by `points` evenly spaced values.
std::vector<long> checkpoints(long steps, int points);

// ---------------------------------------------------------------------------
// Exact laws available for some kinds.

// Law of rank(gamma_0...gamma_{n-1}) for n = 0..n_max: out[n][r].
// Finite support: Markov chain on the reachable normalized products (up to
// sign), or nullopt if more than `cap` states appear. Rotation/projection
// mix: the rank stays d until the first draw of the fixed matrix, after
// which it equals the rank of that matrix.
std::optional<std::vector<std::vector<double>>> exact_rank_law(
    const DistributionSpec& s, long n_max, int cap = 256);

// ---------------------------------------------------------------------------
// Experiments.

struct LambdaParams {
  std::vector<double> alpha_fracs = {0.5, 0.7, 0.9, 0.95, 0.98};
};

struct ContractionParams {
  std::vector<double> x, y, v;  // empty: e1, e2, x
  double tolerance = 0.10;      // relative, decay rate vs lambda
  double exclusion_max = 0.9;
  int pilot_samples = 1000000;
};

struct CoefficientParams {
  std::vector<double> f, v;  // empty: e1, e1
  double threshold = 0.01;
  double stationarity = 2.0;
};

struct SpectralParams {
  long n_ref = 0;  // 0: steps / 10
  double stationarity = 2.0;
  double eigen_rate_frac = 0.9;
};

struct RankParams {
  std::vector<std::vector<double>> probes;  // empty: basis vectors
  long n_check = 20;
};

struct MixingParams {
  std::vector<std::vector<double>> initial;  // empty: e1, e2
  bool include_constant = true;
};

ExperimentReport run_lambda12(const DistributionSpec& s,
                              const ExperimentOptions& o,
                              const LambdaParams& p = {});
ExperimentReport run_contraction(const DistributionSpec& s,
                                 const ExperimentOptions& o,
                                 const ContractionParams& p = {});
ExperimentReport run_coefficients(const DistributionSpec& s,
                                  const ExperimentOptions& o,
                                  const CoefficientParams& p = {});
ExperimentReport run_spectral(const DistributionSpec& s,
                              const ExperimentOptions& o,
                              const SpectralParams& p = {});
ExperimentReport run_rank_kernel(const DistributionSpec& s,
                                 const ExperimentOptions& o,
                                 const RankParams& p = {});
ExperimentReport run_mixing(const DistributionSpec& s,
                            const ExperimentOptions& o,
                            const MixingParams& p = {});

}  // namespace pivotal::exp
