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

#include "pivotal/linalg.hpp"
#include "pivotal/pivot.hpp"
#include "pivotal/rng.hpp"
#include "pivotal/semigroup.hpp"

namespace pivotal {

// ---------------------------------------------------------------------------
// Free-group toy model: m = 1, Schottky letters uniform on the generators,
// unknown blocks drawn from one of several laws.

enum class KappaKind { Letters, Words, Powers };
const char* kappa_name(KappaKind k);
KappaKind kappa_from_name(const std::string& s);

FreeWord random_generator(Stream& r);
FreeWord sample_kappa(KappaKind k, Stream& r);

// Tags i.i.d. Bernoulli(alpha); everything about block n is drawn from
// Stream(seed, letters, n).
BlockSource<FreeWord> free_group_source(double alpha, KappaKind kappa, uint64_t seed);

// pbar_3 = 2 * (second pivot step) + 1 over independent runs, run i keyed by
// derive_seed(seed, i). Each run stops at level stop_m; the first
// stop_m - margin pivots are then final up to a return of `margin` levels.
std::vector<uint64_t> free_group_pbar3(double alpha, KappaKind kappa, long runs, uint64_t seed,
                                       int threads = 1, int64_t stop_m = 40,
                                       uint64_t margin = 30);

// ---------------------------------------------------------------------------
// Matrix distributions.

enum class DistKind {
  FiniteSupport,
  RotationProjectionMix,  // mix * Haar(SO(d)) + (1 - mix) * delta_fixed
  HeavyTailPolar,         // K1 diag(e^X, e^-X) K2, X ~ Pareto(shape, 1)
  RotationComposed,       // fixed * Haar(SO(d))
};

struct DistributionSpec {
  DistKind kind = DistKind::FiniteSupport;
  std::string name;
  int dim = 2;
  std::vector<Mat> atoms;
  std::vector<double> weights;  // normalized
  double mix = 0.5;
  Mat fixed;
  double pareto_shape = 1.0;

  void validate() const;
  // Returns c * g for a draw g and some c > 0, adding log(1 / c) to
  // *log_scale when given (heavy-tailed draws would overflow otherwise).
  Mat sample(Stream& r, double* log_scale = nullptr) const;
  struct Draw {
    Mat g;                    // c * draw
    double log_scale = 0.0;   // log(1 / c)
    double log_abs_det = 0.0; // log|det(draw)|, -inf when singular
  };
  // Same stream consumption as sample(). The determinant is exact for the
  // heavy-tailed kind even when the rescaled draw underflows.
  Draw draw(Stream& r) const;
  // Whether every draw is invertible (determines the rank experiments).
  bool invertible() const;
};

DistributionSpec fix_sl2();
DistributionSpec fix_heavy(double shape = 1.0);
DistributionSpec fix_rotproj();
DistributionSpec fix_rankdrop();
DistributionSpec fix_rotations();
DistributionSpec fix_diagonal();
// Uniform on A, A^-1, B, B^-1 with A = diag(l, 1/l), B = R A R^-1, R the
// rotation by pi/4.
DistributionSpec fix_pingpong(double l = 10.0);
// Eight nearly rank-one atoms spread around the circle.
DistributionSpec fix_clustered();
// Haar rotation followed by a fixed proximal matrix.
DistributionSpec fix_rotation_composed();
DistributionSpec fixture_by_name(const std::string& name);
std::vector<std::string> fixture_names();

// JSON forms: {"fixture": NAME} | {"kind": "finite_support", "dim", "atoms",
// "weights"} | {"kind": "rotation_projection_mix", "dim", "mix", "fixed"} |
// {"kind": "heavy_tail_polar", "pareto_shape"} | {"kind":
// "rotation_composed", "dim", "fixed"} | {"kind": "custom_file", "path"}.
DistributionSpec spec_from_json(const std::string& text);
std::string spec_to_json(const DistributionSpec& s);

double determinant(const Mat& g);

}  // namespace pivotal
