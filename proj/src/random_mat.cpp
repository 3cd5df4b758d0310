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

#include "pivotal/random_mat.hpp"

#include <cmath>

namespace pivotal {

Mat gaussian_mat(int rows, int cols, Stream& rng) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

Mat haar_orthogonal(int d, Stream& rng) {
  Mat a = gaussian_mat(d, d, rng);
  Mat q(d, d);
  for (int j = 0; j < d; ++j) {
    std::vector<double> v(d);
    for (int i = 0; i < d; ++i) v[i] = a(i, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k < j; ++k) {
        double c = 0;
        for (int i = 0; i < d; ++i) c += q(i, k) * v[i];
        for (int i = 0; i < d; ++i) v[i] -= c * q(i, k);
      }
    }
    double n = vec_norm(v);
    // R_jj = <a_j, q_j> > 0 by construction of Gram-Schmidt.
    for (int i = 0; i < d; ++i) q(i, j) = v[i] / n;
  }
  return q;
}

std::vector<double> random_unit(int d, Stream& rng) {
  std::vector<double> v(d);
  double n = 0;
  do {
    for (double& x : v) x = rng.normal();
    n = vec_norm(v);
  } while (n == 0.0);
  for (double& x : v) x /= n;
  return v;
}

Mat rotation2(double t) {
  double c = std::cos(t), s = std::sin(t);
  return Mat(2, 2, {c, -s, s, c});
}

Mat contracted_mat(int d, double q, Stream& rng) {
  std::vector<double> diag(d, 1.0);
  for (int i = 1; i < d; ++i) diag[i] = q * (0.1 + 0.9 * rng.uniform());
  return haar_orthogonal(d, rng) * Mat::diag(diag) * haar_orthogonal(d, rng);
}

}  // namespace pivotal
