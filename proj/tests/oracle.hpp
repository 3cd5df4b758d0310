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

// Test-only oracles, written without any library numerics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using Dense = std::vector<std::vector<double>>;

// Jacobi and the Gram products run in extended precision: singular values
// taken as square roots of Gram eigenvalues lose accuracy on the small end
// otherwise.
using LDense = std::vector<std::vector<long double>>;

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
// non-increasing.
inline std::vector<long double> jacobi_eigenvalues(LDense a) {
  int n = static_cast<int>(a.size());
  for (int sweep = 0; sweep < 100; ++sweep) {
    long double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-300L) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0L) continue;
        long double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        long double t = (theta >= 0 ? 1.0L : -1.0L) /
                        (std::fabs(theta) + std::sqrt(theta * theta + 1));
        long double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < n; ++k) {
          long double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          long double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<long double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end(), std::greater<long double>());
  return ev;
}

inline std::vector<double> sym_eigenvalues(const Dense& a) {
  LDense l(a.size());
  for (size_t i = 0; i < a.size(); ++i) l[i].assign(a[i].begin(), a[i].end());
  std::vector<long double> ev = jacobi_eigenvalues(l);
  return std::vector<double>(ev.begin(), ev.end());
}

// Singular values of an r x c matrix from the eigenvalues of g^T g.
inline std::vector<double> singular_values(const Dense& g) {
  int r = static_cast<int>(g.size()), c = static_cast<int>(g[0].size());
  LDense m(c, std::vector<long double>(c, 0.0L));
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j)
      for (int k = 0; k < r; ++k)
        m[i][j] += static_cast<long double>(g[k][i]) * g[k][j];
  std::vector<long double> ev = jacobi_eigenvalues(m);
  std::vector<double> out;
  for (long double x : ev) out.push_back(static_cast<double>(std::sqrt(std::max(0.0L, x))));
  return out;
}

inline Dense product(const Dense& a, const Dense& b) {
  Dense r(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t k = 0; k < b.size(); ++k)
      for (size_t j = 0; j < b[0].size(); ++j) r[i][j] += a[i][k] * b[k][j];
  return r;
}

inline double norm(const Dense& g) { return singular_values(g)[0]; }

// min over c of ||x - c y|| / ||x||, the second formula for the projective
// distance.
inline double proj_dist_ls(const std::vector<double>& x,
                           const std::vector<double>& y) {
  double xy = 0, yy = 0, xx = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    xy += x[i] * y[i];
    yy += y[i] * y[i];
    xx += x[i] * x[i];
  }
  double c = xy / yy, r = 0;
  for (size_t i = 0; i < x.size(); ++i)
    r += (x[i] - c * y[i]) * (x[i] - c * y[i]);
  return std::sqrt(r / xx);
}

}  // namespace oracle
