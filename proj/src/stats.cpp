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

#include "pivotal/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>

#include "pivotal/error.hpp"
#include "pivotal/rng.hpp"

namespace pivotal::stats {

double chi_square_sf(double x, double dof) {
  if (dof <= 0) return 1.0;
  if (x <= 0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, x));
}

TestResult chi_square_gof(const std::vector<double>& observed,
                          const std::vector<double>& probs,
                          double min_expected) {
  if (observed.size() != probs.size())
    throw InputError("observed and probability vectors differ in length");
  double n = std::accumulate(observed.begin(), observed.end(), 0.0);
  double psum = std::accumulate(probs.begin(), probs.end(), 0.0);
  std::vector<double> o = observed, e(probs.size());
  for (size_t i = 0; i < probs.size(); ++i) e[i] = n * probs[i];
  if (psum < 1.0 - 1e-12) {
    o.push_back(0.0);
    e.push_back(n * (1.0 - psum));
  }
  // Pool from the tail.
  while (e.size() > 1 && e.back() < min_expected) {
    double eb = e.back(), ob = o.back();
    e.pop_back();
    o.pop_back();
    e.back() += eb;
    o.back() += ob;
  }
  TestResult r;
  for (size_t i = 0; i < e.size(); ++i) {
    if (e[i] <= 0) {
      if (o[i] > 0) {
        r.statistic = INFINITY;
        r.p_value = 0;
        return r;
      }
      continue;
    }
    r.statistic += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
  }
  r.dof = static_cast<double>(e.size()) - 1;
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

TestResult chi_square_homogeneity(const std::vector<double>& a,
                                  const std::vector<double>& b,
                                  double min_expected) {
  size_t n = std::max(a.size(), b.size());
  std::vector<double> x(n, 0.0), y(n, 0.0);
  std::copy(a.begin(), a.end(), x.begin());
  std::copy(b.begin(), b.end(), y.begin());
  double na = std::accumulate(x.begin(), x.end(), 0.0);
  double nb = std::accumulate(y.begin(), y.end(), 0.0);
  auto expected_min = [&](size_t i) {
    double t = x[i] + y[i];
    return std::min(t * na, t * nb) / (na + nb);
  };
  while (x.size() > 1 && expected_min(x.size() - 1) < min_expected) {
    double xb = x.back(), yb = y.back();
    x.pop_back();
    y.pop_back();
    x.back() += xb;
    y.back() += yb;
  }
  TestResult r;
  double N = na + nb;
  for (size_t i = 0; i < x.size(); ++i) {
    double t = x[i] + y[i];
    if (t == 0) continue;
    double ea = t * na / N, eb = t * nb / N;
    r.statistic += (x[i] - ea) * (x[i] - ea) / ea + (y[i] - eb) * (y[i] - eb) / eb;
  }
  r.dof = static_cast<double>(x.size()) - 1;
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 200; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InputError("KS needs two nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  size_t i = 0, j = 0;
  double d = 0.0;
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::fabs(i / na - j / nb));
  }
  double ne = na * nb / (na + nb);
  double sq = std::sqrt(ne);
  TestResult r;
  r.statistic = d;
  r.p_value = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
  return r;
}

double mean(const std::vector<double>& x) {
  if (x.empty()) return NAN;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  double m = mean(x), s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double quantile(std::vector<double> x, double q) {
  if (x.empty()) return NAN;
  std::sort(x.begin(), x.end());
  double pos = q * static_cast<double>(x.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(pos));
  size_t hi = std::min(lo + 1, x.size() - 1);
  double t = pos - static_cast<double>(lo);
  return x[lo] + t * (x[hi] - x[lo]);
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double autocorrelation(const std::vector<double>& x, int lag) {
  size_t n = x.size();
  if (lag < 0 || static_cast<size_t>(lag) >= n) return NAN;
  double m = mean(x), den = 0, num = 0;
  for (size_t i = 0; i < n; ++i) den += (x[i] - m) * (x[i] - m);
  for (size_t i = 0; i + lag < n; ++i) num += (x[i] - m) * (x[i + lag] - m);
  return den > 0 ? num / den : NAN;
}

Interval wilson(double k, double n, double z) {
  if (n <= 0) return {0, 1};
  double p = k / n, z2 = z * z;
  double c = (p + z2 / (2 * n)) / (1 + z2 / n);
  double h = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {std::max(0.0, c - h), std::min(1.0, c + h)};
}

LinearFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InputError("fit vectors differ in length");
  LinearFit f;
  f.n = static_cast<int>(x.size());
  if (f.n < 2) return f;
  double mx = mean(x), my = mean(y), sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (f.n > 2) {
    double rss = 0;
    for (size_t i = 0; i < x.size(); ++i) {
      double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_se = std::sqrt(rss / (f.n - 2) / sxx);
  }
  return f;
}

Interval bootstrap_mean_ci(const std::vector<double>& x, int resamples,
                           uint64_t seed, double level) {
  if (x.empty()) return {NAN, NAN};
  std::vector<double> means(resamples);
  for (int r = 0; r < resamples; ++r) {
    Stream s(seed, tag::kBootstrap, static_cast<uint64_t>(r));
    double acc = 0;
    for (size_t i = 0; i < x.size(); ++i) acc += x[s.below(x.size())];
    means[r] = acc / static_cast<double>(x.size());
  }
  double a = (1 - level) / 2;
  return {quantile(means, a), quantile(means, 1 - a)};
}

TailFit exponential_tail(const std::vector<uint64_t>& x, int resamples, uint64_t seed,
                         double p_lo, double p_hi) {
  if (x.empty()) throw InputError("no samples");
  if (resamples < 1) throw InputError("need at least one resample");
  std::vector<uint64_t> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(x.size());
  auto survival = [&](const std::vector<uint64_t>& s, uint64_t t) {
    auto it = std::lower_bound(s.begin(), s.end(), t);
    return static_cast<double>(s.end() - it) / n;
  };
  std::vector<uint64_t> ts;
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && sorted[i] == sorted[i - 1]) continue;
    double p = survival(sorted, sorted[i]);
    if (p >= p_lo && p <= p_hi) ts.push_back(sorted[i]);
  }
  TailFit out;
  out.points = static_cast<int>(ts.size());
  if (ts.size() < 3) {
    out.rate = NAN;
    out.ci = {NAN, NAN};
    return out;
  }
  out.t_lo = ts.front();
  out.t_hi = ts.back();
  auto fit = [&](const std::vector<uint64_t>& s) {
    std::vector<double> tx, ly;
    for (uint64_t t : ts) {
      double p = survival(s, t);
      if (p > 0) {
        tx.push_back(static_cast<double>(t));
        ly.push_back(std::log(p));
      }
    }
    return tx.size() >= 3 ? -ols(tx, ly).slope : NAN;
  };
  out.rate = fit(sorted);
  std::vector<double> rates;
  std::vector<uint64_t> s(x.size());
  for (int r = 0; r < resamples; ++r) {
    Stream st(seed, tag::kBootstrap, static_cast<uint64_t>(r));
    for (auto& v : s) v = x[st.below(x.size())];
    std::sort(s.begin(), s.end());
    double v = fit(s);
    if (std::isfinite(v)) rates.push_back(v);
  }
  if (rates.empty()) {
    out.ci = {NAN, NAN};
  } else {
    out.ci = {quantile(rates, 0.025), quantile(rates, 0.975)};
  }
  return out;
}

}  // namespace pivotal::stats
