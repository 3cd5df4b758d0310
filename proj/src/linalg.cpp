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

#include "pivotal/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <utility>

#include "pivotal/error.hpp"

namespace pivotal {

Mat::Mat(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw InputError("negative matrix shape");
  a_.assign(static_cast<size_t>(rows) * cols, 0.0);
}

Mat::Mat(int rows, int cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), a_(std::move(entries)) {
  if (rows < 0 || cols < 0 ||
      a_.size() != static_cast<size_t>(rows) * cols) {
    throw InputError("matrix shape does not match entry count");
  }
  if (!all_finite()) throw InputError("matrix has non-finite entries");
}

Mat::Mat(int rows, int cols, std::initializer_list<double> entries)
    : Mat(rows, cols, std::vector<double>(entries)) {}

Mat Mat::identity(int d) {
  Mat m(d, d);
  for (int i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::diag(const std::vector<double>& d) {
  int n = static_cast<int>(d.size());
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = d[i];
  if (!m.all_finite()) throw InputError("matrix has non-finite entries");
  return m;
}

Mat Mat::column(const std::vector<double>& v) {
  return Mat(static_cast<int>(v.size()), 1, v);
}

Mat Mat::row(const std::vector<double>& v) {
  return Mat(1, static_cast<int>(v.size()), v);
}

Mat Mat::transpose() const {
  Mat t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Mat Mat::scaled(double c) const {
  Mat r = *this;
  for (double& x : r.a_) x *= c;
  return r;
}

double Mat::frobenius() const {
  double s = 0.0;
  for (double x : a_) s += x * x;
  return std::sqrt(s);
}

double Mat::max_abs() const {
  double m = 0.0;
  for (double x : a_) m = std::max(m, std::fabs(x));
  return m;
}

bool Mat::is_zero() const {
  return std::all_of(a_.begin(), a_.end(), [](double x) { return x == 0.0; });
}

bool Mat::all_finite() const {
  return std::all_of(a_.begin(), a_.end(),
                     [](double x) { return std::isfinite(x); });
}

Mat operator*(const Mat& x, const Mat& y) {
  if (x.cols_ != y.rows_) throw InputError("shapes are not composable");
  Mat r(x.rows_, y.cols_);
  for (int i = 0; i < x.rows_; ++i) {
    for (int k = 0; k < x.cols_; ++k) {
      double a = x(i, k);
      if (a == 0.0) continue;
      const double* yr = &y.a_[static_cast<size_t>(k) * y.cols_];
      double* rr = &r.a_[static_cast<size_t>(i) * r.cols_];
      for (int j = 0; j < y.cols_; ++j) rr[j] += a * yr[j];
    }
  }
  return r;
}

Mat operator+(const Mat& x, const Mat& y) {
  if (x.rows_ != y.rows_ || x.cols_ != y.cols_)
    throw InputError("shape mismatch");
  Mat r = x;
  for (size_t i = 0; i < r.a_.size(); ++i) r.a_[i] += y.a_[i];
  return r;
}

Mat operator-(const Mat& x, const Mat& y) {
  if (x.rows_ != y.rows_ || x.cols_ != y.cols_)
    throw InputError("shape mismatch");
  Mat r = x;
  for (size_t i = 0; i < r.a_.size(); ++i) r.a_[i] -= y.a_[i];
  return r;
}

double vec_norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

ProjPoint::ProjPoint(std::vector<double> x) : c_(std::move(x)) {
  double n = vec_norm(c_);
  if (!(n > 0.0) || !std::isfinite(n))
    throw DomainError("projective point needs a finite nonzero vector");
  for (double& v : c_) v /= n;
  for (double v : c_) {
    if (std::fabs(v) > 1e-12) {
      if (v < 0) {
        for (double& w : c_) w = -w;
      }
      break;
    }
  }
}

namespace {

// One-sided (Hestenes) Jacobi on the columns of a rows x cols matrix with
// rows >= cols. Works column-major on a copy.
void jacobi_columns(int r, int c, std::vector<double>& w,
                    std::vector<double>& v) {
  v.assign(static_cast<size_t>(c) * c, 0.0);
  for (int i = 0; i < c; ++i) v[static_cast<size_t>(i) * c + i] = 1.0;
  const double tol = 1e-15;
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < c - 1; ++p) {
      double* wp = &w[static_cast<size_t>(p) * r];
      for (int q = p + 1; q < c; ++q) {
        double* wq = &w[static_cast<size_t>(q) * r];
        double alpha = 0, beta = 0, gamma = 0;
        for (int i = 0; i < r; ++i) {
          alpha += wp[i] * wp[i];
          beta += wq[i] * wq[i];
          gamma += wp[i] * wq[i];
        }
        if (gamma == 0.0 || alpha == 0.0 || beta == 0.0) continue;
        if (std::fabs(gamma) <= tol * std::sqrt(alpha) * std::sqrt(beta))
          continue;
        rotated = true;
        double zeta = (beta - alpha) / (2.0 * gamma);
        double t = (zeta >= 0 ? 1.0 : -1.0) /
                   (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        double cs = 1.0 / std::sqrt(1.0 + t * t);
        double sn = cs * t;
        for (int i = 0; i < r; ++i) {
          double a = wp[i], b = wq[i];
          wp[i] = cs * a - sn * b;
          wq[i] = sn * a + cs * b;
        }
        double* vp = &v[static_cast<size_t>(p) * c];
        double* vq = &v[static_cast<size_t>(q) * c];
        for (int i = 0; i < c; ++i) {
          double a = vp[i], b = vq[i];
          vp[i] = cs * a - sn * b;
          vq[i] = sn * a + cs * b;
        }
      }
    }
    if (!rotated) break;
  }
}

Svd svd_tall(const Mat& g) {
  int r = g.rows(), c = g.cols();
  std::vector<double> w(static_cast<size_t>(r) * c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) w[static_cast<size_t>(j) * r + i] = g(i, j);
  std::vector<double> v;
  jacobi_columns(r, c, w, v);
  std::vector<double> s(c);
  for (int j = 0; j < c; ++j) {
    double acc = 0;
    for (int i = 0; i < r; ++i) {
      double x = w[static_cast<size_t>(j) * r + i];
      acc += x * x;
    }
    s[j] = std::sqrt(acc);
  }
  std::vector<int> order(c);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return s[a] > s[b]; });
  Svd out;
  out.s.resize(c);
  out.u = Mat(r, c);
  out.v = Mat(c, c);
  for (int k = 0; k < c; ++k) {
    int j = order[k];
    out.s[k] = s[j];
    for (int i = 0; i < r; ++i) {
      out.u(i, k) =
          s[j] > 0 ? w[static_cast<size_t>(j) * r + i] / s[j] : 0.0;
    }
    for (int i = 0; i < c; ++i) out.v(i, k) = v[static_cast<size_t>(j) * c + i];
  }
  // Zero columns leave no left direction; complete with a unit vector so the
  // top direction is always defined.
  if (c > 0 && out.s[0] == 0.0) out.u(0, 0) = 1.0;
  return out;
}

inline double hyp(double a, double b) { return std::hypot(a, b); }

// Closed-form top singular value of a 2x2 matrix.
double norm2x2(const Mat& g) {
  double a = g(0, 0), b = g(0, 1), c = g(1, 0), d = g(1, 1);
  return 0.5 * (hyp(a + d, c - b) + hyp(a - d, b + c));
}

}  // namespace

Svd svd(const Mat& g) {
  if (g.empty()) throw InputError("empty matrix");
  if (!g.all_finite()) throw InputError("matrix has non-finite entries");
  if (g.rows() >= g.cols()) return svd_tall(g);
  Svd t = svd_tall(g.transpose());
  std::swap(t.u, t.v);
  return t;
}

std::vector<double> singular_values(const Mat& g) { return svd(g).s; }

SingularData singular_data(const Mat& g) {
  Svd s = svd(g);
  SingularData d;
  d.values = s.s;
  d.left.resize(g.rows());
  d.right.resize(g.cols());
  for (int i = 0; i < g.rows(); ++i) d.left[i] = s.u(i, 0);
  for (int i = 0; i < g.cols(); ++i) d.right[i] = s.v(i, 0);
  return d;
}

double op_norm(const Mat& g) {
  if (g.empty()) throw InputError("empty matrix");
  if (!g.all_finite()) throw InputError("matrix has non-finite entries");
  if (g.rows() == 1 || g.cols() == 1) return vec_norm(g.entries());
  if (g.rows() == 2 && g.cols() == 2) return norm2x2(g);
  return svd(g).s[0];
}

Mat wedge_square(const Mat& g) {
  int r = g.rows(), c = g.cols();
  if (r < 2 || c < 2) throw InputError("wedge square needs both sides >= 2");
  if (!g.all_finite()) throw InputError("matrix has non-finite entries");
  int R = r * (r - 1) / 2, C = c * (c - 1) / 2;
  Mat w(R, C);
  int I = 0;
  for (int i = 0; i < r; ++i) {
    for (int j = i + 1; j < r; ++j, ++I) {
      int J = 0;
      for (int k = 0; k < c; ++k) {
        for (int l = k + 1; l < c; ++l, ++J) {
          w(I, J) = g(i, k) * g(j, l) - g(i, l) * g(j, k);
        }
      }
    }
  }
  return w;
}

double sigma(const Mat& g) {
  if (g.empty()) throw InputError("empty matrix");
  if (!g.all_finite()) throw InputError("matrix has non-finite entries");
  if (g.is_zero()) throw DomainError("sigma is undefined for the zero map");
  if (g.rows() == 1 || g.cols() == 1) return 0.0;
  if (g.rows() == 2 && g.cols() == 2) {
    double s1 = norm2x2(g);
    double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
    return std::min(1.0, std::fabs(det) / (s1 * s1));
  }
  std::vector<double> s = svd(g).s;
  return std::min(1.0, s[1] / s[0]);
}

double proj_dist(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InputError("dimension mismatch");
  double nx = vec_norm(x), ny = vec_norm(y);
  if (!(nx > 0) || !(ny > 0)) throw DomainError("zero vector has no line");
  double acc = 0.0;
  size_t n = x.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      double m = (x[i] / nx) * (y[j] / ny) - (x[j] / nx) * (y[i] / ny);
      acc += m * m;
    }
  }
  return std::min(1.0, std::sqrt(acc));
}

double proj_dist(const ProjPoint& x, const ProjPoint& y) {
  return proj_dist(x.coords(), y.coords());
}

double alignment_ratio(const Mat& g, const Mat& h) {
  if (g.cols() != h.rows()) throw InputError("shapes are not composable");
  double ng = op_norm(g), nh = op_norm(h);
  if (ng == 0.0 || nh == 0.0)
    throw DomainError("alignment is undefined for a zero factor");
  return op_norm(g * h) / (ng * nh);
}

bool is_aligned(const Mat& g, const Mat& h, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw InputError("eps must lie in (0,1]");
  if (g.cols() != h.rows()) throw InputError("shapes are not composable");
  double ng = op_norm(g), nh = op_norm(h);
  if (ng == 0.0 || nh == 0.0)
    throw DomainError("alignment is undefined for a zero factor");
  return op_norm(g * h) >= eps * ng * nh;
}

namespace {

bool v_cone(const Mat& g, const std::vector<double>& v, double eps) {
  Mat x = Mat::column(v);
  return vec_norm((g * x).entries()) >= eps * op_norm(g) * vec_norm(v);
}

bool u_cone(const Mat& g, const std::vector<double>& v, double eps) {
  if (static_cast<int>(v.size()) != g.rows())
    throw InputError("vector dimension does not match the image space");
  Svd s = svd(g);
  double cut = 1e-13 * s.s[0];
  int k = static_cast<int>(s.s.size());
  std::vector<double> pre(g.cols(), 0.0), proj(g.rows(), 0.0);
  for (int i = 0; i < k; ++i) {
    if (s.s[i] <= cut) continue;
    double c = 0.0;
    for (int r = 0; r < g.rows(); ++r) c += s.u(r, i) * v[r];
    for (int r = 0; r < g.rows(); ++r) proj[r] += c * s.u(r, i);
    for (int r = 0; r < g.cols(); ++r) pre[r] += c / s.s[i] * s.v(r, i);
  }
  double res = 0.0;
  for (int r = 0; r < g.rows(); ++r) res += (v[r] - proj[r]) * (v[r] - proj[r]);
  if (std::sqrt(res) > 1e-10 * vec_norm(v)) return false;
  if (vec_norm(pre) == 0.0) return false;
  return v_cone(g, pre, eps);
}

}  // namespace

bool cone_test(const Mat& g, const std::vector<double>& v, double eps,
               Cone which) {
  if (g.is_zero()) throw DomainError("cones are undefined for the zero map");
  if (vec_norm(v) == 0.0) throw InputError("cone test needs v != 0");
  switch (which) {
    case Cone::V:
      if (static_cast<int>(v.size()) != g.cols())
        throw InputError("vector dimension does not match the source space");
      return v_cone(g, v, eps);
    case Cone::U:
      return u_cone(g, v, eps);
    case Cone::W:
      return u_cone(g.transpose(), v, eps);
  }
  return false;
}

Mat normalized(const Mat& g, double* log_scale) {
  double n = op_norm(g);
  if (n == 0.0) return g;
  if (log_scale) *log_scale += std::log(n);
  return g.scaled(1.0 / n);
}

namespace {

// lim log||M^n|| / n by repeated squaring with renormalization.
double log_spectral_radius(const Mat& m) {
  double n0 = op_norm(m);
  if (n0 == 0.0) return -std::numeric_limits<double>::infinity();
  Mat g = m.scaled(1.0 / n0);
  double ell = std::log(n0);
  double est = ell;
  double scale = 1.0;
  for (int k = 0; k < 60; ++k) {
    Mat sq = g * g;
    double t = op_norm(sq);
    if (t == 0.0) return -std::numeric_limits<double>::infinity();
    g = sq.scaled(1.0 / t);
    ell = 2.0 * ell + std::log(t);
    scale *= 2.0;
    est = ell / scale;
  }
  return est;
}

}  // namespace

SpectralData spectral(const Mat& g, double tol, long max_iter) {
  if (!g.is_square()) throw InputError("spectral data needs a square matrix");
  if (g.is_zero()) throw DomainError("spectral data is undefined for zero");
  SpectralData out;
  int d = g.rows();
  double l1 = log_spectral_radius(g);
  out.rho1 = std::isfinite(l1) ? std::exp(l1) : 0.0;
  if (out.rho1 > 0.0) {
    double l12 = log_spectral_radius(wedge_square(g));
    double r12 = std::isfinite(l12) ? std::exp(l12) : 0.0;
    out.rho2 = std::min(out.rho1, r12 / out.rho1);
  }
  std::vector<double> x(d, 1.0 / std::sqrt(static_cast<double>(d)));
  int calm = 0;
  long it = 0;
  for (; it < max_iter; ++it) {
    std::vector<double> y(d, 0.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) y[i] += g(i, j) * x[j];
    double n = vec_norm(y);
    if (!(n > 0.0)) break;
    for (double& v : y) v /= n;
    double step = proj_dist(x, y);
    x = std::move(y);
    calm = step < tol ? calm + 1 : 0;
    if (calm >= 8) {
      out.converged = true;
      ++it;
      break;
    }
  }
  out.iterations = it;
  if (out.converged && out.rho1 > out.rho2) {
    out.has_top_eigen = true;
    out.top_eigen = ProjPoint(x);
  }
  return out;
}

std::string to_string(const Mat& g) {
  std::string s = "[";
  char buf[40];
  for (int i = 0; i < g.rows(); ++i) {
    s += i ? ", [" : "[";
    for (int j = 0; j < g.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%s%.17g", j ? ", " : "", g(i, j));
      s += buf;
    }
    s += "]";
  }
  return s + "]";
}

}  // namespace pivotal
