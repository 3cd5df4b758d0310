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

#include <initializer_list>
#include <string>
#include <vector>

namespace pivotal {

// Dense real matrix, row-major. Square matrices are the elements of End(E);
// 1 x d and d x 1 shapes stand for covectors and vectors.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols);
  Mat(int rows, int cols, std::vector<double> entries);
  Mat(int rows, int cols, std::initializer_list<double> entries);

  static Mat identity(int d);
  static Mat diag(const std::vector<double>& d);
  static Mat column(const std::vector<double>& v);
  static Mat row(const std::vector<double>& v);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }
  bool is_square() const { return rows_ == cols_; }

  double operator()(int i, int j) const { return a_[i * cols_ + j]; }
  double& operator()(int i, int j) { return a_[i * cols_ + j]; }
  const std::vector<double>& entries() const { return a_; }

  Mat transpose() const;
  Mat scaled(double c) const;
  double frobenius() const;
  double max_abs() const;
  bool is_zero() const;
  bool all_finite() const;

  friend Mat operator*(const Mat& x, const Mat& y);
  friend Mat operator+(const Mat& x, const Mat& y);
  friend Mat operator-(const Mat& x, const Mat& y);
  friend bool operator==(const Mat& x, const Mat& y) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> a_;
};

// Normalized representative of a line: unit norm, first coordinate with
// |x_i| > 1e-12 made positive.
class ProjPoint {
 public:
  ProjPoint() = default;
  explicit ProjPoint(std::vector<double> x);
  int dim() const { return static_cast<int>(c_.size()); }
  const std::vector<double>& coords() const { return c_; }
  Mat as_column() const { return Mat::column(c_); }
  Mat as_row() const { return Mat::row(c_); }

 private:
  std::vector<double> c_;
};

struct SingularData {
  std::vector<double> values;  // non-increasing
  std::vector<double> left;    // unit top left-singular vector
  std::vector<double> right;   // unit top right-singular vector
};

// Thin SVD g = U diag(s) V^T with k = min(rows, cols) columns.
struct Svd {
  std::vector<double> s;
  Mat u;  // rows x k
  Mat v;  // cols x k
};

struct SpectralData {
  double rho1 = 0.0;
  double rho2 = 0.0;
  bool has_top_eigen = false;
  ProjPoint top_eigen;
  long iterations = 0;
  bool converged = false;
};

enum class Cone { V, U, W };

Svd svd(const Mat& g);
SingularData singular_data(const Mat& g);
std::vector<double> singular_values(const Mat& g);

double op_norm(const Mat& g);
Mat wedge_square(const Mat& g);
double sigma(const Mat& g);

double vec_norm(const std::vector<double>& x);
double proj_dist(const ProjPoint& x, const ProjPoint& y);
// Same distance on raw nonzero vectors.
double proj_dist(const std::vector<double>& x, const std::vector<double>& y);

// ||gh|| >= eps ||g|| ||h||; covector x vector products use |scalar|.
bool is_aligned(const Mat& g, const Mat& h, double eps);
// The ratio ||gh|| / (||g|| ||h||) behind is_aligned.
double alignment_ratio(const Mat& g, const Mat& h);

bool cone_test(const Mat& g, const std::vector<double>& v, double eps,
               Cone which);

SpectralData spectral(const Mat& g, double tol = 1e-12,
                      long max_iter = 1000000);

// Product rescaled to unit operator norm (zero stays zero); log of the
// discarded factor is added to log_scale when given.
Mat normalized(const Mat& g, double* log_scale = nullptr);

std::string to_string(const Mat& g);

}  // namespace pivotal
