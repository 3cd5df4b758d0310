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
#include <string>
#include <vector>

#include "pivotal/fixtures.hpp"
#include "pivotal/linalg.hpp"
#include "pivotal/pivot.hpp"
#include "pivotal/semigroup.hpp"

namespace pivotal {

// Approximate rank-one boundary classes [u_k w_k^T] read off long products.
struct BoundaryAtlas {
  int dim = 2;
  int horizon = 0;
  std::vector<std::vector<double>> u;  // top left-singular directions
  std::vector<std::vector<double>> w;  // top right-singular directions
  std::vector<double> quality;         // sigma of the generating product
  double separation = 0.0;             // min over pairs of min(d(u), d(w))
  size_t size() const { return u.size(); }
  Mat center(size_t k) const;
};

struct AtlasOptions {
  int n_dirs = 7;
  int horizon = 60;
  int candidates = 512;
  double separation_floor = 1e-2;
  double quality_max = 1e-6;
};

BoundaryAtlas estimate_boundary(const DistributionSpec& dist, const AtlasOptions& opt,
                                uint64_t seed);

double delta_of(double eps);  // eps^6 / 48
// min_c ||g - c pi|| / ||g|| in the Frobenius norm.
double center_distance(const Mat& g, const Mat& pi);

struct SearchPoint {
  int m = 0;
  double eps = 0.0;
  int retained = 0;
  double min_mass = 0.0;
  double worst = 1.0;
  bool accepted = false;
  std::string reason;
};

struct BuildOptions {
  double rho = 1.0 / 6;
  int m_max = 40;
  std::vector<double> eps_grid = {0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625};
  int samples = 1 << 14;
  double alpha_min = 1e-3;
  int pool_cap = 4096;     // stored members per cluster
  int search_cap = 256;    // members per cluster used while searching
  int search_angles = 90;
  int search_random = 64;
  AtlasOptions atlas;
};

struct SchottkyModel {
  DistributionSpec dist;
  int m = 1;
  double eps = 0.5;
  double rho = 1.0 / 6;
  double alpha = 0.0;
  double delta = 0.0;
  double radius = 0.0;
  int horizon = 0;
  uint64_t seed = 0;
  std::vector<Mat> centers;
  std::vector<double> masses;          // empirical nu^{*m}(S_k)
  std::vector<std::vector<Mat>> pool;  // normalized members of S_k
  std::vector<SearchPoint> log;

  int dim() const { return dist.dim; }
  MatrixSemigroup semigroup() const { return MatrixSemigroup{dist.dim, eps}; }
  // Clusters S_k containing the normalized product g.
  std::vector<int> clusters_of(const Mat& g) const;
  // f(x) = (1/N) sum_k 1_{S_k}(x) / nu^{*m}(S_k).
  double density(const Mat& g) const;
  void validate() const;
};

SchottkyModel build_schottky(const DistributionSpec& dist, const BuildOptions& opt,
                             uint64_t seed);

// Product of m draws; letters appended when requested.
Mat sample_word(const DistributionSpec& dist, int m, Stream& r,
                std::vector<Mat>* letters = nullptr);

// nu_s as a finite measure: uniform over clusters, then uniform over the
// first `cap` stored members.
SchottkyMeasure<Mat> model_measure(const SchottkyModel& model, int cap = 64);

// m-blocks x ~ nu^m tagged Schottky with probability alpha f(x): the tags
// are i.i.d. and the letters keep the law nu^N.
BlockSource<Mat> interleaved_source(const SchottkyModel& model, uint64_t seed);

struct Adversaries {
  std::vector<Mat> left;   // h with nu_s{s : not h A s} measured
  std::vector<Mat> right;  // h with nu_s{s : not s A h} measured
};

Adversaries default_adversaries(const SchottkyModel& model, int random_count, int angles,
                                uint64_t seed);

struct SchottkyReport {
  double worst_left = 0.0;
  double worst_right = 0.0;
  std::vector<size_t> failing_left;
  std::vector<size_t> failing_right;
  uint64_t checked = 0;
  bool passed = true;
  double worst() const { return std::max(worst_left, worst_right); }
};

template <Semigroup S>
SchottkyReport verify_measure(const S& sg, const SchottkyMeasure<typename S::Element>& nu,
                              const std::vector<typename S::Element>& left,
                              const std::vector<typename S::Element>& right, double rho,
                              bool stop_early = false) {
  SchottkyReport rep;
  const double tol = 1e-12;
  for (int side = 0; side < 2; ++side) {
    const auto& hs = side == 0 ? left : right;
    for (size_t i = 0; i < hs.size(); ++i) {
      double v = nu.misalignment(sg, hs[i], side, mass_key(mass_kind::kDiagnostics, side, i)).value;
      ++rep.checked;
      double& worst = side == 0 ? rep.worst_left : rep.worst_right;
      worst = std::max(worst, v);
      if (v > rho + tol) {
        (side == 0 ? rep.failing_left : rep.failing_right).push_back(i);
        rep.passed = false;
        if (stop_early) return rep;
      }
    }
  }
  return rep;
}

// Verification with `budget` pooled members in total.
SchottkyReport verify_schottky(const SchottkyModel& model, const Adversaries& adv, double rho,
                               int budget = 1 << 14);

std::string model_to_json(const SchottkyModel& model, bool include_pool = true);
SchottkyModel model_from_json(const std::string& text);

}  // namespace pivotal
