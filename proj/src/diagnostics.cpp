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


#include "pivotal/diagnostics.hpp"

#include <cmath>

#include "pivotal/random_mat.hpp"

namespace pivotal {

namespace {

Mat random_left(int d, Stream& r) {
  if (r.uniform() < 0.5) return Mat::row(random_unit(d, r));
  return gaussian_mat(d, d, r);
}

Mat random_right(int d, Stream& r) {
  if (r.uniform() < 0.5) return Mat::column(random_unit(d, r));
  return gaussian_mat(d, d, r);
}

double ratio(const Mat& a, const Mat& b) {
  if (a.is_zero() || b.is_zero()) return 0.0;
  return alignment_ratio(a, b);
}

std::vector<Mat> all_blocks(const PBlocks<MatrixSemigroup>& pb) {
  std::vector<Mat> out;
  for (size_t i = 0; i < pb.count(); ++i) out.push_back(pb.block(i));
  return out;
}

// nu_s{s in C : pred(s)} / nu_s(C) with C = {even A s A next}.
template <class Pred>
double conditional(const MatrixSemigroup& sg, const SchottkyMeasure<Mat>& nu, const Mat& even,
                   const Mat& next, const Pred& pred, uint64_t key) {
  auto in_c = [&](const Mat& s) { return sg.aligned(even, s) && sg.aligned(s, next); };
  double c = nu.mass_where(in_c, key).value;
  if (c <= 0) return 1.0;
  double a = nu.mass_where([&](const Mat& s) { return in_c(s) && pred(s); }, key).value;
  return a / c;
}

}  // namespace

MatrixDiagnostics matrix_diagnostics(const SchottkyModel& model, const SchottkyMeasure<Mat>& nu_s,
                                     const PivotRun& run, const std::vector<SpanBlock<Mat>>& hats,
                                     int samples, uint64_t seed) {
  const MatrixSemigroup sg = model.semigroup();
  const double eps = model.eps;
  const int d = model.dim();
  PBlocks<MatrixSemigroup> pb(sg, run, hats);
  MatrixDiagnostics rep;
  rep.recursive = check_recursive_alignment(sg, run, hats);
  const std::vector<Mat> blocks = all_blocks(pb);

  for (size_t k = 0; 2 * k + 1 < blocks.size(); ++k) {
    const Mat& odd = blocks[2 * k + 1];
    double s = odd.is_zero() ? 1.0 : sigma(odd);
    ++rep.sigma_checked;
    rep.sigma_max = std::max(rep.sigma_max, s);
    if (s > model.delta * (1 + 1e-9)) ++rep.sigma_violations;
  }

  if (blocks.size() >= 2) {
    for (int t = 0; t < samples; ++t) {
      Stream r(seed, tag::kDiagnostics, t);
      size_t i = r.below(blocks.size() - 1);
      size_t k = i + 1 + r.below(std::min<size_t>(12, blocks.size() - 1 - i));
      size_t j = i + r.below(k - i + 1);
      Mat f, h;
      bool found = false;
      for (int a = 0; a < 32 && !found; ++a) {
        f = random_left(d, r);
        found = ratio(f, blocks[i]) >= eps;
      }
      if (!found) continue;
      found = false;
      for (int a = 0; a < 32 && !found; ++a) {
        h = random_right(d, r);
        found = ratio(blocks[k], h) >= eps;
      }
      if (!found) continue;
      Mat left = f;
      for (size_t q = i; q < j; ++q) left = normalized(left * blocks[q]);
      Mat right = h;
      for (size_t q = k + 1; q-- > j;) right = normalized(blocks[q] * right);
      double x = ratio(left, right) / (eps / 2);
      ++rep.heredity_checked;
      rep.heredity_min_ratio = std::min(rep.heredity_min_ratio, x);
      if (x < 1 - 1e-9) ++rep.heredity_violations;
    }
  }

  const double bound = 1 - model.rho / (1 - 2 * model.rho);
  for (int t = 0; t < samples && run.settled > 0; ++t) {
    Stream r(seed, tag::kDiagnostics, 1000000 + t);
    size_t k = r.below(run.settled);
    Mat g = random_left(d, r);
    Mat h = random_right(d, r);
    const Mat& even = blocks.at(2 * k);
    const Mat& next = pb.next(k);
    double a = conditional(sg, nu_s, even, next, [&](const Mat& s) { return sg.aligned(g, s); },
                           mass_key(mass_kind::kDiagnostics, 1, t));
    double b = conditional(sg, nu_s, even, next, [&](const Mat& s) { return sg.aligned(s, h); },
                           mass_key(mass_kind::kDiagnostics, 2, t));
    rep.schottky_checked += 2;
    rep.schottky_min = std::min({rep.schottky_min, a, b});
    if (a < bound - 1e-12) ++rep.schottky_violations;
    if (b < bound - 1e-12) ++rep.schottky_violations;
  }
  return rep;
}

LeftRight left_right_pivots(const SchottkyModel& model, const SchottkyMeasure<Mat>& nu_s,
                            const PivotRun& run, const std::vector<SpanBlock<Mat>>& hats,
                            const Mat& f, const Mat& h, uint64_t n, uint64_t seed) {
  const int d = model.dim();
  if (f.empty() || f.cols() != d || h.empty() || h.rows() != d)
    throw InputError("f must have d columns and h d rows");
  if (f.is_zero() || h.is_zero()) throw DomainError("f and h must be nonzero");
  const MatrixSemigroup sg = model.semigroup();
  const double eps = model.eps;
  PBlocks<MatrixSemigroup> pb(sg, run, hats);
  const std::vector<Mat> blocks = all_blocks(pb);
  const size_t settled = run.settled;
  LeftRight out;
  auto tau = [&](uint64_t which, uint64_t k) {
    return keyed_uniform(seed, tag::kLeftRight, (which << 48) | k);
  };
  auto in_c = [&](size_t k, const Mat& s) {
    return sg.aligned(blocks[2 * k], s) && sg.aligned(s, pb.next(k));
  };
  auto cond = [&](size_t k, auto pred, uint64_t key) {
    return conditional(sg, nu_s, blocks[2 * k], pb.next(k), pred, key);
  };
  auto mul = [](const Mat& a, const Mat& b) { return normalized(a * b); };

  // l^f
  Mat F = f;
  for (size_t k = 0; k < settled; ++k) {
    F = mul(F, blocks[2 * k]);
    const Mat& odd = blocks[2 * k + 1];
    bool al = !F.is_zero() && sg.aligned(F, odd);
    double p = cond(k, [&](const Mat& s) { return !F.is_zero() && sg.aligned(F, s); },
                    mass_key(mass_kind::kLeftRight, 0, k));
    if (p < 0.75 - 1e-12) ++out.low_conditionals;
    if (al && (p <= 0 || tau(0, k) < 0.75 / p)) {
      out.l_f = static_cast<int64_t>(k);
      out.l_certified = ratio(F, odd) >= eps;
      break;
    }
    F = mul(F, odd);
  }

  // q_n = max{k : pbar_{2k} <= n}
  if (n > hats.size()) throw InputError("n beyond the stored hat-v blocks");
  if (settled == 0 || pb.start(2 * settled) <= n)
    throw InputError("n beyond the settled pivots");
  uint64_t q = 0;
  while (q + 1 <= settled && pb.start(2 * (q + 1)) <= n) ++q;
  out.q_n = q;

  // r_n^h
  Mat R = pb.start(2 * q) < n ? mul(pb.span(pb.start(2 * q), n), h) : h;
  for (uint64_t k = 0;; ++k) {
    if (k >= q) {
      if (tau(1, k) < 0.75) {
        out.r_n = static_cast<int64_t>(k);
        out.r_escape = true;
        break;
      }
      continue;
    }
    size_t i = q - k - 1;
    const Mat& odd = blocks[2 * i + 1];
    bool al = !R.is_zero() && sg.aligned(odd, R);
    double p = cond(i, [&](const Mat& s) { return !R.is_zero() && sg.aligned(s, R); },
                    mass_key(mass_kind::kLeftRight, 1, k));
    if (p < 0.75 - 1e-12) ++out.low_conditionals;
    if (al && (p <= 0 || tau(1, k) < 0.75 / p)) {
      out.r_n = static_cast<int64_t>(k);
      out.r_certified = ratio(odd, R) >= eps;
      break;
    }
    R = mul(blocks[2 * i], mul(odd, R));
  }

  // c_n
  Mat L = blocks[0];
  for (uint64_t k = 0;; ++k) {
    if (2 * k + 1 >= q) {
      if (tau(2, k) < 0.5) {
        out.c_n = static_cast<int64_t>(k);
        out.c_escape = true;
        break;
      }
      continue;
    }
    if (k > 0) L = mul(L, mul(blocks[2 * k - 1], blocks[2 * k]));
    size_t i1 = q - k - 1;
    const Mat& s1 = blocks[2 * i1 + 1];
    const Mat& s2 = blocks[2 * k + 1];
    uint64_t a = pb.start(2 * q - 2 * k);
    Mat X = a < n ? mul(pb.span(a, n), L) : L;
    auto ok = [&](const Mat& u, const Mat& v) {
      if (X.is_zero() || !sg.aligned(u, X)) return false;
      Mat y = mul(u, X);
      return !y.is_zero() && sg.aligned(y, v);
    };
    bool al = ok(s1, s2);
    double joint, c1, c2;
    uint64_t key = mass_key(mass_kind::kLeftRight, 2, k);
    if (nu_s.is_finite()) {
      const auto& at = nu_s.atoms();
      const auto& w = nu_s.weights();
      std::vector<char> m1(at.size()), m2(at.size());
      c1 = c2 = joint = 0;
      for (size_t t = 0; t < at.size(); ++t) {
        m1[t] = in_c(i1, at[t]);
        m2[t] = in_c(k, at[t]);
        if (m1[t]) c1 += w[t];
        if (m2[t]) c2 += w[t];
      }
      for (size_t t = 0; t < at.size(); ++t) {
        if (!m1[t] || X.is_zero() || !sg.aligned(at[t], X)) continue;
        Mat y = mul(at[t], X);
        if (y.is_zero()) continue;
        double inner = 0;
        for (size_t u = 0; u < at.size(); ++u)
          if (m2[u] && sg.aligned(y, at[u])) inner += w[u];
        joint += w[t] * inner;
      }
    } else {
      c1 = nu_s.mass_where([&](const Mat& s) { return in_c(i1, s); }, key).value;
      c2 = nu_s.mass_where([&](const Mat& s) { return in_c(k, s); }, key).value;
      joint = nu_s.pair_mass([&](const Mat& u, const Mat& v) {
        return in_c(i1, u) && in_c(k, v) && ok(u, v);
      }, key).value;
    }
    double p = c1 > 0 && c2 > 0 ? joint / (c1 * c2) : 0.0;
    if (p < 0.5 - 1e-12) ++out.low_conditionals;
    if (al && (p <= 0 || tau(2, k) < 0.5 / p)) {
      out.c_n = static_cast<int64_t>(k);
      out.c_certified = ratio(s1, X) >= eps && ratio(mul(s1, X), s2) >= eps;
      break;
    }
  }
  return out;
}

}  // namespace pivotal
