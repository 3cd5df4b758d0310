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

#include <vector>

#include "pivotal/linalg.hpp"
#include "pivotal/rng.hpp"

namespace pivotal {

Mat gaussian_mat(int rows, int cols, Stream& rng);
// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the sign
// of diag(R) fixed to be positive).
Mat haar_orthogonal(int d, Stream& rng);
std::vector<double> random_unit(int d, Stream& rng);
// Rotation of the plane by angle t.
Mat rotation2(double t);
// K1 diag(1, q r_2, ..., q r_d) K2 with r_i uniform in [0.1, 1], so that
// sigma lies in [0.1 q, q].
Mat contracted_mat(int d, double q, Stream& rng);

}  // namespace pivotal
