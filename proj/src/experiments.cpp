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

#include "pivotal/experiments.hpp"

#include <algorithm>
#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "pivotal/error.hpp"
#include "pivotal/parallel.hpp"
#include "pivotal/rng.hpp"
#include "pivotal/stats.hpp"

namespace pivotal::exp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Salts for derived key spaces.
constexpr uint64_t kSaltBoot = 0xB0;
constexpr uint64_t kSaltPilot = 0x91;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::vector<double> basis(int d, int i) {
  std::vector<double> e(d, 0.0);
  e[i] = 1.0;
  return e;
}

void check_vector(const std::vector<double>& x, int d, const char* what) {
  if (static_cast<int>(x.size()) != d)
    throw InputError(std::string(what) + " has the wrong dimension");
  for (double c : x)
    if (!std::isfinite(c)) throw InputError(std::string(what) + " is not finite");
  if (vec_norm(x) == 0.0) throw DomainError(std::string(what) + " is zero");
}

void check_options(const DistributionSpec& s, const ExperimentOptions& o) {
  s.validate();
  if (o.trajectories < 1) throw InputError("need at least one trajectory");
  if (o.steps < 1) throw InputError("need at least one step");
  if (o.bootstrap < 1) throw InputError("need at least one bootstrap resample");
  if (o.points < 1) throw InputError("need at least one checkpoint");
}

bool has_log_moment(const DistributionSpec& s) {
  return s.kind != DistKind::HeavyTailPolar || s.pareto_shape > 1.0;
}

// Quantile that tolerates infinite values.
double quant(std::vector<double> x, double q) {
  if (x.empty()) return kNaN;
  std::sort(x.begin(), x.end());
  double pos = q * static_cast<double>(x.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(pos));
  size_t hi = std::min(lo + 1, x.size() - 1);
  double t = pos - static_cast<double>(lo);
  if (x[lo] == x[hi] || t == 0.0) return x[lo];
  return x[lo] + t * (x[hi] - x[lo]);
}

// Midpoint of the estimated median interval (q(1/2 - h) + q(1/2 + h)) / 2,
// h = 1.5 / sqrt(n). Equals the median in the limit when it is unique, and
// stays stable when the law has a gap at probability exactly 1/2.
double median_mid(const std::vector<double>& x) {
  if (x.empty()) return kNaN;
  double h = std::min(0.25, 1.5 / std::sqrt(static_cast<double>(x.size())));
  return 0.5 * (quant(x, 0.5 - h) + quant(x, 0.5 + h));
}

double finite_mean(const std::vector<double>& x, double* sd = nullptr) {
  double acc = 0;
  long n = 0;
  for (double v : x)
    if (std::isfinite(v)) acc += v, ++n;
  if (n == 0) {
    if (sd) *sd = kNaN;
    return kNaN;
  }
  double m = acc / n;
  if (sd) {
    double ss = 0;
    for (double v : x)
      if (std::isfinite(v)) ss += (v - m) * (v - m);
    *sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  }
  return m;
}

// Values of sample[t][k] over the index set, NaN (excluded) dropped.
std::vector<double> column(const std::vector<std::vector<double>>& a,
                           const std::vector<long>& idx, size_t k) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (long t : idx)
    if (!std::isnan(a[t][k])) out.push_back(a[t][k]);
  return out;
}

std::vector<long> identity_index(long n) {
  std::vector<long> idx(n);
  std::iota(idx.begin(), idx.end(), 0L);
  return idx;
}

std::vector<long> resample(long n, uint64_t seed, int b) {
  Stream r(seed, tag::kBootstrap, static_cast<uint64_t>(b));
  std::vector<long> idx(n);
  for (long& i : idx) i = static_cast<long>(r.below(static_cast<uint64_t>(n)));
  return idx;
}

using Statistic = std::function<double(const std::vector<long>& idx, size_t k)>;

// Decay rate -slope of stat(n) against n over checkpoint indices ks, with a
// percentile CI from trajectory resampling (window held fixed).
Rate fit_rate(const std::string& name, const std::vector<long>& ns,
              const std::vector<size_t>& ks, const Statistic& stat, long T,
              const ExperimentOptions& o, uint64_t salt) {
  Rate r;
  r.name = name;
  r.value = r.ci_lo = r.ci_hi = kNaN;
  auto fit = [&](const std::vector<long>& idx, bool record) {
    std::vector<double> x, y;
    for (size_t k : ks) {
      double v = stat(idx, k);
      if (std::isfinite(v)) {
        x.push_back(static_cast<double>(ns[k]));
        y.push_back(v);
      }
    }
    if (record) {
      r.points = static_cast<int>(x.size());
      if (!x.empty()) {
        r.window_lo = static_cast<long>(x.front());
        r.window_hi = static_cast<long>(x.back());
      }
    }
    if (x.size() < 3) return kNaN;
    return -stats::ols(x, y).slope;
  };
  r.value = fit(identity_index(T), true);
  if (std::isnan(r.value)) return r;
  uint64_t seed = derive_seed(o.seed, kSaltBoot + salt);
  std::vector<double> slopes;
  for (int b = 0; b < o.bootstrap; ++b) {
    double v = fit(resample(T, seed, b), false);
    if (std::isfinite(v)) slopes.push_back(v);
  }
  if (!slopes.empty()) {
    r.ci_lo = quant(slopes, 0.025);
    r.ci_hi = quant(slopes, 0.975);
  }
  return r;
}

// Checkpoint indices with n in [lo, hi].
std::vector<size_t> window(const std::vector<long>& ns, long lo, long hi) {
  std::vector<size_t> ks;
  for (size_t k = 0; k < ns.size(); ++k)
    if (ns[k] >= lo && ns[k] <= hi) ks.push_back(k);
  return ks;
}

// Tail window of a decaying proportion: P in [1e-3, 0.3], n >= 1.
std::vector<size_t> proportion_window(const std::vector<long>& ns,
                                      const std::vector<double>& p) {
  std::vector<size_t> ks;
  for (size_t k = 0; k < ns.size(); ++k)
    if (ns[k] >= 1 && p[k] >= 1e-3 && p[k] <= 0.3) ks.push_back(k);
  return ks;
}

void add_summary_rows(Curve& c, long n, const std::vector<double>& v) {
  double sd = 0;
  double m = finite_mean(v, &sd);
  long cnt = static_cast<long>(
      std::count_if(v.begin(), v.end(), [](double x) { return std::isfinite(x); }));
  double h = cnt > 1 ? 1.959963984540054 * sd / std::sqrt(static_cast<double>(cnt)) : kNaN;
  c.rows.push_back({n, "mean", m, m - h, m + h});
  double med = quant(v, 0.5);
  c.rows.push_back({n, "median", med, quant(v, 0.25), quant(v, 0.75)});
  c.rows.push_back({n, "q10", quant(v, 0.1), kNaN, kNaN});
  c.rows.push_back({n, "q90", quant(v, 0.9), kNaN, kNaN});
}

Check make_check(const std::string& name, bool ok, double value,
                 double threshold, const std::string& detail) {
  return Check{name, ok, value, threshold, detail};
}

// Per-trajectory forward pass: draws and walk snapshots at checkpoints.
struct Path {
  std::vector<Mat> draws;
  std::vector<Walk> snaps;
};

Path simulate(const DistributionSpec& s, uint64_t seed, long t, long steps,
              const std::vector<long>& ns, bool keep_draws) {
  Path p;
  Stream r(seed, tag::kTrajectory, static_cast<uint64_t>(t));
  Walk w(s.dim);
  if (keep_draws) p.draws.reserve(steps);
  size_t k = 0;
  p.snaps.reserve(ns.size());
  for (long n = 0; n <= steps; ++n) {
    if (k < ns.size() && ns[k] == n) {
      p.snaps.push_back(w);
      ++k;
    }
    if (n == steps) break;
    DistributionSpec::Draw x = s.draw(r);
    if (keep_draws) p.draws.push_back(x.g);
    w.step(x);
  }
  return p;
}

// xi_n = gamma_n ... gamma_{N-1} y_N at the checkpoints, where y_N is the
// top right-singular vector of the final product. Then the product up to n
// maps xi_n onto the final top left-singular line exactly.
std::vector<std::vector<double>> pulled_back_limit(const Path& p,
                                                   const std::vector<long>& ns,
                                                   std::vector<double>* u_final) {
  const Walk& last = p.snaps.back();
  std::vector<std::vector<double>> xi(ns.size());
  if (last.zero()) return xi;
  SingularData sd = singular_data(last.unit());
  if (u_final) *u_final = sd.left;
  std::vector<double> v = sd.right;
  int d = last.dim();
  long N = ns.back();
  size_t k = ns.size();
  for (long n = N; n >= 0; --n) {
    if (k > 0 && ns[k - 1] == n) xi[--k] = v;
    if (n == 0) break;
    const Mat& g = p.draws[n - 1];
    std::vector<double> y(d, 0.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) y[i] += g(i, j) * v[j];
    double nv = vec_norm(y);
    if (!(nv > 0)) throw InternalError("limit direction pulled back to zero");
    for (double& c : y) c /= nv;
    v = std::move(y);
  }
  return xi;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

ExperimentReport base_report(const char* name, const DistributionSpec& s,
                             const ExperimentOptions& o) {
  ExperimentReport r;
  r.experiment = name;
  r.spec = s;
  r.seed = o.seed;
  r.n_traj = o.trajectories;
  r.n_steps = o.steps;
  return r;
}

// lambda-hat from -log sigma at the final checkpoint; excluded trajectories
// (sigma = 0) are NaN.
struct LambdaEstimate {
  double value = kNaN;
  stats::Interval ci{kNaN, kNaN};
  long used = 0;
};

LambdaEstimate estimate_lambda(const std::vector<std::vector<double>>& nls,
                               long N, const ExperimentOptions& o) {
  std::vector<double> v;
  for (const auto& row : nls)
    if (std::isfinite(row.back())) v.push_back(row.back() / static_cast<double>(N));
  LambdaEstimate e;
  e.used = static_cast<long>(v.size());
  if (v.empty()) return e;
  e.value = stats::mean(v);
  e.ci = stats::bootstrap_mean_ci(v, o.bootstrap, derive_seed(o.seed, kSaltBoot));
  return e;
}

// Turns a fitted decay rate into a growth rate.
void growth(Rate& r) {
  auto neg = [](double x) { return std::isnan(x) ? x : -x; };
  r.value = neg(r.value);
  double lo = r.ci_lo;
  r.ci_lo = neg(r.ci_hi);
  r.ci_hi = neg(lo);
}

Statistic median_of(const std::vector<std::vector<double>>& a) {
  return [&a](const std::vector<long>& idx, size_t k) {
    return quant(column(a, idx, k), 0.5);
  };
}

// Comparator for decay rates: lambda-hat when log-moments are finite,
// otherwise the growth rate of the median of -log sigma over the same window
// (lambda is +inf there and the mean is not a consistent estimator).
double rate_reference(const DistributionSpec& s, const LambdaEstimate& lam,
                      const Rate& sigma_window) {
  return has_log_moment(s) ? lam.value : sigma_window.value;
}

}  // namespace

// ---------------------------------------------------------------------------

bool ExperimentReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const Check& c) { return c.passed; });
}

double ExperimentReport::scalar(const std::string& key) const {
  for (const auto& [k, v] : scalars)
    if (k == key) return v;
  throw InputError("no scalar named " + key);
}

const Rate& ExperimentReport::rate(const std::string& name) const {
  for (const Rate& r : rates)
    if (r.name == name) return r;
  throw InputError("no rate named " + name);
}

const Check& ExperimentReport::check(const std::string& name) const {
  for (const Check& c : checks)
    if (c.name == name) return c;
  throw InputError("no check named " + name);
}

const Curve& ExperimentReport::curve(const std::string& name) const {
  for (const Curve& c : curves)
    if (c.name == name) return c;
  throw InputError("no curve named " + name);
}

std::string report_json(const ExperimentReport& r, bool include_timing) {
  using nlohmann::ordered_json;
  auto num = [](double x) -> ordered_json {
    if (std::isfinite(x)) return x + 0.0;  // no negative zero
    if (std::isnan(x)) return nullptr;
    return x > 0 ? "inf" : "-inf";
  };
  ordered_json j;
  j["experiment"] = r.experiment;
  if (r.has_spec)
    j["spec"] = ordered_json::parse(spec_to_json(r.spec));
  else
    j["spec"] = nullptr;
  j["seed"] = r.seed;
  j["n_traj"] = r.n_traj;
  j["n_steps"] = r.n_steps;
  j["passed"] = r.passed();
  ordered_json checks = ordered_json::array();
  for (const Check& c : r.checks)
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"value", num(c.value)},
                      {"threshold", num(c.threshold)},
                      {"detail", c.detail}});
  j["checks"] = checks;
  ordered_json scal = ordered_json::object();
  for (const auto& [k, v] : r.scalars) scal[k] = num(v);
  j["scalars"] = scal;
  ordered_json rates = ordered_json::array();
  for (const Rate& x : r.rates)
    rates.push_back({{"name", x.name},
                     {"value", num(x.value)},
                     {"ci_lo", num(x.ci_lo)},
                     {"ci_hi", num(x.ci_hi)},
                     {"window", {x.window_lo, x.window_hi}},
                     {"points", x.points}});
  j["rates"] = rates;
  j["excluded"] = r.excluded;
  j["deferred"] = r.deferred;
  ordered_json curves = ordered_json::object();
  for (const Curve& c : r.curves) {
    ordered_json rows = ordered_json::array();
    for (const CurvePoint& p : c.rows)
      rows.push_back({p.n, p.statistic, num(p.value), num(p.ci_lo), num(p.ci_hi)});
    curves[c.name] = rows;
  }
  j["curves"] = curves;
  if (include_timing) j["wall_seconds"] = r.wall_seconds;
  return j.dump(2) + "\n";
}

std::string curve_csv(const Curve& c) {
  std::string out = "n,statistic,value,ci_lo,ci_hi\n";
  char buf[160];
  for (const CurvePoint& p : c.rows) {
    std::snprintf(buf, sizeof buf, "%ld,%s,%.17g,%.17g,%.17g\n", p.n,
                  p.statistic.c_str(), p.value + 0.0, p.ci_lo + 0.0, p.ci_hi + 0.0);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------

Walk::Walk(int dim) : d_(dim), g_(Mat::identity(dim)) {
  if (dim < 2) throw InputError("walks need dimension >= 2");
  if (d_ > 2) w_ = Mat::identity(d_ * (d_ - 1) / 2);
}

void Walk::step(const DistributionSpec::Draw& x) {
  if (x.g.rows() != d_ || x.g.cols() != d_)
    throw InputError("draw has the wrong shape");
  ++n_;
  if (zero_) return;
  g_ = normalized(g_ * x.g, &l_);
  l_ += x.log_scale;
  if (g_.is_zero()) {
    zero_ = true;
    l_ = lw_ = -kInf;
    return;
  }
  if (d_ == 2) {
    lw_ += x.log_abs_det;
    // An underflowed determinant only occurs for draws of determinant +1.
    if (determinant(x.g) < 0) det_sign_ = -det_sign_;
  } else if (std::isfinite(lw_)) {
    w_ = normalized(w_ * wedge_square(x.g), &lw_);
    lw_ += 2 * x.log_scale;
    if (w_.is_zero()) lw_ = -kInf;
  }
}

double Walk::log_sigma() const {
  if (zero_) return -kInf;
  return std::min(0.0, lw_ - 2 * l_);
}

int Walk::rank() const {
  if (zero_) return 0;
  if (std::isfinite(lw_)) {
    if (d_ == 2) return 2;
  } else {
    if (d_ == 2) return 1;
  }
  std::vector<double> s = singular_values(g_);
  int r = 0;
  for (double v : s)
    if (v > 1e-9 * s[0]) ++r;
  if (std::isfinite(lw_)) r = std::max(r, 2);
  return r;
}

double Walk::log_image(const std::vector<double>& x) const {
  if (zero_) return -kInf;
  std::vector<double> y(d_, 0.0);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) y[i] += g_(i, j) * x[j];
  double n = vec_norm(y);
  return n > 0 ? l_ + std::log(n) : -kInf;
}

double Walk::log_image_dist(const std::vector<double>& x,
                            const std::vector<double>& y) const {
  double lx = log_image(x), ly = log_image(y);
  if (!std::isfinite(lx) || !std::isfinite(ly)) return kNaN;
  double lwedge;
  if (d_ == 2) {
    double c = x[0] * y[1] - x[1] * y[0];
    lwedge = c == 0.0 ? -kInf : lw_ + std::log(std::abs(c));
  } else {
    int m = d_ * (d_ - 1) / 2, I = 0;
    std::vector<double> xy(m);
    for (int i = 0; i < d_; ++i)
      for (int j = i + 1; j < d_; ++j, ++I) xy[I] = x[i] * y[j] - x[j] * y[i];
    double acc = 0;
    for (int a = 0; a < m; ++a) {
      double s = 0;
      for (int b = 0; b < m; ++b) s += w_(a, b) * xy[b];
      acc += s * s;
    }
    lwedge = acc > 0 && std::isfinite(lw_) ? lw_ + 0.5 * std::log(acc) : -kInf;
  }
  return std::min(0.0, lwedge - lx - ly);
}

int Walk::image_orientation(const std::vector<double>& x,
                            const std::vector<double>& y) const {
  if (d_ != 2) throw InputError("orientation is defined for d = 2");
  if (zero_ || !std::isfinite(lw_)) return 0;
  double c = x[0] * y[1] - x[1] * y[0];
  if (c == 0.0) return 0;
  return (c > 0 ? 1 : -1) * det_sign_;
}

std::vector<long> checkpoints(long steps, int points) {
  std::vector<long> ns;
  for (long n = 0; n <= std::min<long>(20, steps); ++n) ns.push_back(n);
  for (int k = 1; k <= points; ++k) {
    long n = static_cast<long>(std::llround(static_cast<double>(steps) * k / points));
    if (n > ns.back()) ns.push_back(n);
  }
  return ns;
}

// ---------------------------------------------------------------------------

namespace {

int numeric_rank(const Mat& g) {
  if (g.is_zero()) return 0;
  std::vector<double> s = singular_values(g);
  int r = 0;
  for (double v : s)
    if (v > 1e-9 * s[0]) ++r;
  return r;
}

// Unit operator norm, first entry of magnitude > 1e-12 positive.
Mat canonical(const Mat& g) {
  Mat h = normalized(g);
  for (double v : h.entries()) {
    if (std::abs(v) > 1e-12) {
      if (v < 0) h = h.scaled(-1.0);
      break;
    }
  }
  return h;
}

}  // namespace

std::optional<std::vector<std::vector<double>>> exact_rank_law(
    const DistributionSpec& s, long n_max, int cap) {
  s.validate();
  int d = s.dim;
  std::vector<std::vector<double>> law(n_max + 1, std::vector<double>(d + 1, 0.0));
  switch (s.kind) {
    case DistKind::HeavyTailPolar:
      for (auto& row : law) row[d] = 1.0;
      return law;
    case DistKind::RotationComposed:
      if (!s.invertible()) return std::nullopt;
      for (auto& row : law) row[d] = 1.0;
      return law;
    case DistKind::RotationProjectionMix: {
      int rf = numeric_rank(s.fixed);
      for (long n = 0; n <= n_max; ++n) {
        double stay = std::pow(s.mix, static_cast<double>(n));
        law[n][d] += stay;
        law[n][rf] += 1.0 - stay;
      }
      return law;
    }
    case DistKind::FiniteSupport:
      if (s.invertible()) {
        for (auto& row : law) row[d] = 1.0;
        return law;
      }
      break;
  }
  std::vector<Mat> states{Mat::identity(d)};
  std::vector<std::vector<std::pair<size_t, double>>> next;
  auto find = [&](const Mat& g) -> size_t {
    for (size_t i = 0; i < states.size(); ++i) {
      const auto& a = states[i].entries();
      const auto& b = g.entries();
      bool same = true;
      for (size_t k = 0; k < a.size() && same; ++k)
        same = std::abs(a[k] - b[k]) <= 1e-9;
      if (same) return i;
    }
    states.push_back(g);
    return states.size() - 1;
  };
  for (size_t i = 0; i < states.size(); ++i) {
    if (static_cast<int>(states.size()) > cap) return std::nullopt;
    std::vector<std::pair<size_t, double>> out;
    for (size_t a = 0; a < s.atoms.size(); ++a) {
      Mat g = states[i] * normalized(s.atoms[a]);
      size_t j = find(g.is_zero() ? Mat(d, d) : canonical(g));
      out.emplace_back(j, s.weights[a]);
    }
    next.push_back(std::move(out));
  }
  std::vector<int> rank(states.size());
  for (size_t i = 0; i < states.size(); ++i) rank[i] = numeric_rank(states[i]);
  std::vector<double> p(states.size(), 0.0);
  p[0] = 1.0;
  for (long n = 0; n <= n_max; ++n) {
    for (size_t i = 0; i < states.size(); ++i) law[n][rank[i]] += p[i];
    std::vector<double> q(states.size(), 0.0);
    for (size_t i = 0; i < states.size(); ++i)
      for (const auto& [j, w] : next[i]) q[j] += p[i] * w;
    p = std::move(q);
  }
  return law;
}

// ---------------------------------------------------------------------------

ExperimentReport run_lambda12(const DistributionSpec& s,
                              const ExperimentOptions& o,
                              const LambdaParams& prm) {
  check_options(s, o);
  for (double a : prm.alpha_fracs)
    if (!(a > 0 && a < 1)) throw InputError("alpha fractions must lie in (0,1)");
  Timer timer;
  ExperimentReport rep = base_report("lambda12", s, o);
  const long T = o.trajectories, N = o.steps;
  std::vector<long> ns = checkpoints(N, o.points);
  const size_t K = ns.size();
  std::vector<std::vector<double>> nls(T, std::vector<double>(K));
  parallel_for(T, o.threads, [&](long t) {
    Path p = simulate(s, o.seed, t, N, ns, false);
    for (size_t k = 0; k < K; ++k) nls[t][k] = -p.snaps[k].log_sigma();
  });
  // sigma = 0 exactly: excluded from every statistic.
  for (auto& row : nls) {
    if (!std::isfinite(row.back())) {
      ++rep.excluded;
      for (double& v : row) v = kNaN;
    }
  }
  LambdaEstimate lam = estimate_lambda(nls, N, o);
  double log_sigma_min = 0.0;
  for (const auto& row : nls)
    for (double v : row)
      if (std::isfinite(v)) log_sigma_min = std::min(log_sigma_min, -v);
  bool non_proximal = std::isfinite(lam.ci.hi) && lam.ci.hi <= 1e-6;

  rep.scalars = {{"lambda_hat", lam.value},
                 {"lambda_ci_lo", lam.ci.lo},
                 {"lambda_ci_hi", lam.ci.hi},
                 {"trajectories_used", static_cast<double>(lam.used)},
                 {"log_sigma_min", log_sigma_min},
                 {"non_proximal", non_proximal ? 1.0 : 0.0}};

  const std::vector<long> all = identity_index(T);
  Curve nl{"neg_log_sigma", {}};
  Curve ln{"lambda_n", {}};
  for (size_t k = 0; k < K; ++k) {
    std::vector<double> v = column(nls, all, k);
    add_summary_rows(nl, ns[k], v);
    if (ns[k] >= 1) {
      double sd = 0, m = finite_mean(v, &sd);
      double h = v.size() > 1 ? 1.959963984540054 * sd / std::sqrt(double(v.size())) : kNaN;
      double n = static_cast<double>(ns[k]);
      ln.rows.push_back({ns[k], "mean", m / n, (m - h) / n, (m + h) / n});
    }
  }
  rep.curves.push_back(nl);
  rep.curves.push_back(ln);

  if (lam.used == 0) {
    // Every product collapsed: nothing to estimate.
  } else if (non_proximal) {
    rep.checks.push_back(make_check(
        "sigma_bounded_below", std::isfinite(log_sigma_min), log_sigma_min, -kInf,
        "lambda-hat vanishes; flagged non-proximal"));
  } else {
    rep.checks.push_back(make_check("lambda_positive", lam.ci.lo > 0, lam.ci.lo,
                                    0.0, "bootstrap CI lower end"));
  }

  // Without a log-moment the mean is not a consistent estimate; the grid is
  // then anchored on the median growth rate.
  double anchor = lam.value;
  if (!has_log_moment(s))
    anchor = quant(column(nls, all, K - 1), 0.5) / static_cast<double>(N);
  rep.scalars.emplace_back("ld_anchor", anchor);
  if (lam.used > 0 && !non_proximal && std::isfinite(anchor)) {
    Curve ld{"large_deviation", {}};
    uint64_t salt = 1;
    for (double frac : prm.alpha_fracs) {
      double alpha = frac * anchor;
      std::string stat = "alpha=" + fmt(frac);
      auto prop = [&, alpha](const std::vector<long>& idx, size_t k) {
        long hit = 0, cnt = 0;
        for (long t : idx) {
          double v = nls[t][k];
          if (std::isnan(v)) continue;
          ++cnt;
          if (v <= alpha * static_cast<double>(ns[k])) ++hit;
        }
        return cnt ? static_cast<double>(hit) / cnt : kNaN;
      };
      std::vector<double> ph(K);
      for (size_t k = 0; k < K; ++k) {
        ph[k] = prop(all, k);
        long cnt = T - rep.excluded;
        stats::Interval ci = stats::wilson(ph[k] * cnt, static_cast<double>(cnt));
        ld.rows.push_back({ns[k], stat, ph[k], ci.lo, ci.hi});
      }
      Statistic logp = [&prop](const std::vector<long>& idx, size_t k) {
        double p = prop(idx, k);
        return p > 0 ? std::log(p) : kNaN;
      };
      Rate r = fit_rate("ld_" + stat, ns, proportion_window(ns, ph), logp, T, o,
                        salt++);
      rep.rates.push_back(r);
      if (r.points >= 3)
        rep.checks.push_back(make_check("ld_decay_" + stat, r.ci_lo > 0, r.ci_lo,
                                        0.0, "fitted tail rate, CI lower end"));
      else
        rep.scalars.emplace_back("ld_points_" + stat, r.points);
    }
    rep.curves.push_back(ld);
  }
  rep.wall_seconds = timer.seconds();
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

// Truncated means E min(log||gamma_0||, T) for T = 10^1..10^4; they stay
// bounded iff log||gamma_0|| is integrable.
Curve moment_pilot(const DistributionSpec& s, uint64_t seed, int samples,
                   std::vector<double>* means) {
  const std::vector<double> caps = {1e1, 1e2, 1e3, 1e4};
  std::vector<double> acc(caps.size(), 0.0);
  Stream r(derive_seed(seed, kSaltPilot), tag::kTrajectory, 0);
  for (int i = 0; i < samples; ++i) {
    double ls = 0;
    Mat g = s.sample(r, &ls);
    double nrm = op_norm(g);
    double x = nrm > 0 ? std::log(nrm) + ls : -kInf;
    for (size_t c = 0; c < caps.size(); ++c) acc[c] += std::max(-caps[c], std::min(x, caps[c]));
  }
  Curve cv{"moment_pilot", {}};
  means->clear();
  for (size_t c = 0; c < caps.size(); ++c) {
    double m = acc[c] / samples;
    means->push_back(m);
    cv.rows.push_back({static_cast<long>(caps[c]), "truncated_mean_log_norm", m,
                       kNaN, kNaN});
  }
  return cv;
}

}  // namespace

ExperimentReport run_contraction(const DistributionSpec& s,
                                 const ExperimentOptions& o,
                                 const ContractionParams& prm) {
  check_options(s, o);
  const int d = s.dim;
  std::vector<double> x = prm.x.empty() ? basis(d, 0) : prm.x;
  std::vector<double> y = prm.y.empty() ? basis(d, 1) : prm.y;
  std::vector<double> v = prm.v.empty() ? x : prm.v;
  check_vector(x, d, "x");
  check_vector(y, d, "y");
  check_vector(v, d, "v");
  if (!(prm.tolerance > 0)) throw InputError("tolerance must be positive");
  Timer timer;
  ExperimentReport rep = base_report("contraction", s, o);
  const long T = o.trajectories, N = o.steps;
  std::vector<long> ns = checkpoints(N, o.points);
  const size_t K = ns.size();
  // NaN marks an excluded sample.
  std::vector<std::vector<double>> dxy(T, std::vector<double>(K, kNaN));
  std::vector<std::vector<double>> dv(T, std::vector<double>(K, kNaN));
  std::vector<std::vector<double>> nls(T, std::vector<double>(K, kNaN));
  parallel_for(T, o.threads, [&](long t) {
    Path p = simulate(s, o.seed, t, N, ns, true);
    std::vector<std::vector<double>> xi = pulled_back_limit(p, ns, nullptr);
    // A vanishing image excludes the sample at that n only (conditioning on
    // a nonzero image).
    for (size_t k = 0; k < K; ++k) {
      const Walk& w = p.snaps[k];
      double ls = w.log_sigma();
      nls[t][k] = std::isfinite(ls) ? -ls : kNaN;
      dxy[t][k] = w.log_image_dist(x, y);
      if (!xi[k].empty()) dv[t][k] = w.log_image_dist(v, xi[k]);
    }
  });
  const std::vector<long> all = identity_index(T);
  Curve cxy{"pair_distance", {}}, cv{"limit_distance", {}}, ex{"exclusion_rate", {}};
  double max_excl = 0;
  for (size_t k = 0; k < K; ++k) {
    std::vector<double> a = column(dxy, all, k), b = column(dv, all, k);
    add_summary_rows(cxy, ns[k], a);
    add_summary_rows(cv, ns[k], b);
    double ea = 1.0 - static_cast<double>(a.size()) / T;
    double eb = 1.0 - static_cast<double>(b.size()) / T;
    max_excl = std::max(max_excl, ea);
    stats::Interval ia = stats::wilson(ea * T, static_cast<double>(T));
    stats::Interval ib = stats::wilson(eb * T, static_cast<double>(T));
    ex.rows.push_back({ns[k], "pair", ea, ia.lo, ia.hi});
    ex.rows.push_back({ns[k], "limit", eb, ib.lo, ib.hi});
  }
  for (long t = 0; t < T; ++t)
    if (std::isnan(dxy[t][K - 1])) ++rep.excluded;

  std::vector<std::vector<double>> nls_end(T, std::vector<double>(1));
  for (long t = 0; t < T; ++t) nls_end[t][0] = nls[t][K - 1];
  LambdaEstimate lam = estimate_lambda(nls_end, N, o);
  std::vector<size_t> win = window(ns, std::max<long>(1, N / 10), N);
  Rate rs = fit_rate("sigma_window", ns, win, median_of(nls), T, o, 10);
  // Fitted on log distances, so the decay rate is minus the slope.
  Rate rxy = fit_rate("pair_distance", ns, win, median_of(dxy), T, o, 11);
  Rate rv = fit_rate("limit_distance", ns, win, median_of(dv), T, o, 12);
  growth(rs);
  rep.rates = {rxy, rv, rs};
  double ref = rate_reference(s, lam, rs);

  long collapsed = 0;
  for (long t = 0; t < T; ++t)
    if (dxy[t][K - 1] == -kInf) ++collapsed;
  std::vector<double> pilot;
  rep.curves = {cxy, cv, ex, moment_pilot(s, o.seed, prm.pilot_samples, &pilot)};
  rep.scalars = {{"lambda_hat", lam.value},
                 {"lambda_ci_lo", lam.ci.lo},
                 {"lambda_ci_hi", lam.ci.hi},
                 {"lambda_window", rs.value},
                 {"rate_reference", ref},
                 {"max_exclusion_rate", max_excl},
                 {"collapsed_fraction", static_cast<double>(collapsed) / T}};

  double wedge = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) wedge += std::abs(x[i] * y[j] - x[j] * y[i]);
  if (wedge == 0.0) {
    bool zero = true;
    for (const auto& row : dxy)
      for (double a : row) zero = zero && (std::isnan(a) || a == -kInf);
    rep.checks.push_back(make_check("identical_points_zero", zero, 0.0, 0.0,
                                    "distance identically 0"));
  } else if (!s.invertible()) {
    rep.checks.push_back(make_check("exclusion_bounded", max_excl <= prm.exclusion_max,
                                    max_excl, prm.exclusion_max,
                                    "largest exclusion rate over n"));
  } else if (std::isfinite(ref) && ref > 1e-6) {
    double rel = std::abs(rxy.value - ref) / ref;
    rep.checks.push_back(make_check(
        "rate_vs_lambda", std::isfinite(rel) && rel <= prm.tolerance, rel,
        prm.tolerance,
        has_log_moment(s) ? "relative to lambda-hat"
                          : "relative to the median growth of -log sigma"));
  }
  if (!has_log_moment(s)) {
    double inc = kInf;
    for (size_t c = 1; c < pilot.size(); ++c) inc = std::min(inc, pilot[c] - pilot[c - 1]);
    rep.scalars.emplace_back("pilot_min_increment", inc);
    rep.checks.push_back(make_check("moment_divergence", inc > 1.0, inc, 1.0,
                                    "smallest increase of the truncated mean per decade"));
    rep.checks.push_back(make_check("contraction_positive",
                                    std::isfinite(rxy.ci_lo) && rxy.ci_lo > 0,
                                    rxy.ci_lo, 0.0, "decay rate CI lower end"));
  }
  rep.wall_seconds = timer.seconds();
  return rep;
}

// ---------------------------------------------------------------------------

ExperimentReport run_coefficients(const DistributionSpec& s,
                                  const ExperimentOptions& o,
                                  const CoefficientParams& prm) {
  check_options(s, o);
  const int d = s.dim;
  std::vector<double> f = prm.f.empty() ? basis(d, 0) : prm.f;
  std::vector<double> v = prm.v.empty() ? basis(d, 0) : prm.v;
  check_vector(f, d, "f");
  check_vector(v, d, "v");
  Timer timer;
  ExperimentReport rep = base_report("coefficients", s, o);
  const long T = o.trajectories, N = o.steps;
  std::vector<long> ns = checkpoints(N, o.points);
  const size_t K = ns.size();
  const double base = std::log(vec_norm(f)) + std::log(vec_norm(v));
  std::vector<std::vector<double>> gap(T, std::vector<double>(K, kNaN));
  parallel_for(T, o.threads, [&](long t) {
    Path p = simulate(s, o.seed, t, N, ns, false);
    for (size_t k = 0; k < K; ++k) {
      const Walk& w = p.snaps[k];
      if (w.zero()) continue;
      const Mat& g = w.unit();
      double c = 0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) c += f[i] * g(i, j) * v[j];
      gap[t][k] = c == 0.0 ? kInf : base - std::log(std::abs(c));
    }
  });
  for (long t = 0; t < T; ++t)
    if (std::isnan(gap[t][K - 1])) ++rep.excluded;
  const std::vector<long> all = identity_index(T);
  Curve cg{"coef_gap", {}}, cn{"gap_over_n", {}}, ci{"infinite_gap", {}};
  for (size_t k = 0; k < K; ++k) {
    std::vector<double> g = column(gap, all, k);
    add_summary_rows(cg, ns[k], g);
    long inf = std::count(g.begin(), g.end(), kInf);
    double pf = g.empty() ? kNaN : static_cast<double>(inf) / g.size();
    stats::Interval w = stats::wilson(inf, static_cast<double>(g.size()));
    ci.rows.push_back({ns[k], "fraction", pf, w.lo, w.hi});
    if (ns[k] >= 1) {
      double n = static_cast<double>(ns[k]);
      cn.rows.push_back({ns[k], "median", quant(g, 0.5) / n, quant(g, 0.25) / n,
                         quant(g, 0.75) / n});
    }
  }
  rep.curves = {cg, cn, ci};
  long n_ref = std::max<long>(1, N / 10);
  size_t k_ref = window(ns, n_ref, N).front();
  std::vector<double> g_end = column(gap, all, K - 1), g_ref = column(gap, all, k_ref);
  double med_end = quant(g_end, 0.5) / static_cast<double>(N);
  double q_end = quant(g_end, 0.9), q_ref = quant(g_ref, 0.9);
  double ratio = (std::abs(q_end - q_ref) <= 1e-12) ? 1.0 : q_end / q_ref;
  long inf_end = std::count(g_end.begin(), g_end.end(), kInf);
  rep.scalars = {{"median_gap_over_n", med_end},
                 {"q90_gap_final", q_end},
                 {"q90_gap_ref", q_ref},
                 {"n_ref", static_cast<double>(ns[k_ref])},
                 {"infinite_fraction_final",
                  g_end.empty() ? kNaN : static_cast<double>(inf_end) / g_end.size()}};
  rep.checks.push_back(make_check("lln_final", med_end < prm.threshold, med_end,
                                  prm.threshold,
                                  "median |log|f g v|/n - log||g||/n| at the last step"));
  bool stat_ok = std::isfinite(ratio) && ratio > 0 && ratio <= prm.stationarity &&
                 ratio >= 1.0 / prm.stationarity;
  rep.checks.push_back(make_check("tail_stationary", stat_ok, ratio, prm.stationarity,
                                  "q90 of the gap, last step over reference step"));
  rep.wall_seconds = timer.seconds();
  return rep;
}

// ---------------------------------------------------------------------------

ExperimentReport run_spectral(const DistributionSpec& s, const ExperimentOptions& o,
                              const SpectralParams& prm) {
  check_options(s, o);
  const int d = s.dim;
  Timer timer;
  ExperimentReport rep = base_report("spectral", s, o);
  const long T = o.trajectories, N = o.steps;
  std::vector<long> ns = checkpoints(N, o.points);
  const size_t K = ns.size();
  long n_ref = prm.n_ref > 0 ? prm.n_ref : std::max<long>(1, N / 10);
  if (n_ref > N) throw InputError("reference step exceeds the number of steps");
  if (std::find(ns.begin(), ns.end(), n_ref) == ns.end()) {
    ns.insert(std::upper_bound(ns.begin(), ns.end(), n_ref), n_ref);
  }
  const size_t K2 = ns.size();
  (void)K;
  std::vector<std::vector<double>> rgap(T, std::vector<double>(K2, kNaN));
  std::vector<std::vector<double>> lrat(T, std::vector<double>(K2, kNaN));
  std::vector<std::vector<double>> edist(T, std::vector<double>(K2, kNaN));
  std::vector<std::vector<double>> nls(T, std::vector<double>(K2, kNaN));
  std::vector<long> deferred(T, 0);
  parallel_for(T, o.threads, [&](long t) {
    Path p = simulate(s, o.seed, t, N, ns, true);
    std::vector<std::vector<double>> xi = pulled_back_limit(p, ns, nullptr);
    for (size_t k = 0; k < K2; ++k) {
      const Walk& w = p.snaps[k];
      if (w.zero()) continue;
      double ls = w.log_sigma();
      nls[t][k] = std::isfinite(ls) ? -ls : kNaN;
      SpectralData sp = spectral(w.unit(), 1e-12, 5000);
      if (!sp.converged || !(sp.rho1 > 0)) {
        ++deferred[t];
        continue;
      }
      double l1 = std::log(sp.rho1);
      rgap[t][k] = -l1;
      if (d == 2) {
        lrat[t][k] = w.log_wedge() - 2 * (w.log_norm() + l1);
      } else if (sp.rho2 > 0) {
        lrat[t][k] = std::log(sp.rho2) - l1;
      }
      if (sp.has_top_eigen && !xi[k].empty()) {
        double e = w.log_image_dist(sp.top_eigen.coords(), xi[k]);
        if (!std::isnan(e)) edist[t][k] = e;
      }
    }
  });
  rep.deferred = std::accumulate(deferred.begin(), deferred.end(), 0L);
  for (long t = 0; t < T; ++t)
    if (std::isnan(rgap[t][K2 - 1])) ++rep.excluded;
  const std::vector<long> all = identity_index(T);
  Curve cg{"rho_gap", {}}, cr{"log_rho2_over_rho1", {}}, ce{"eigen_distance", {}};
  for (size_t k = 0; k < K2; ++k) {
    if (ns[k] == 0) continue;
    add_summary_rows(cg, ns[k], column(rgap, all, k));
    add_summary_rows(cr, ns[k], column(lrat, all, k));
    add_summary_rows(ce, ns[k], column(edist, all, k));
  }
  rep.curves = {cg, cr, ce};
  std::vector<std::vector<double>> nls_end(T, std::vector<double>(1));
  for (long t = 0; t < T; ++t) nls_end[t][0] = nls[t][K2 - 1];
  LambdaEstimate lam = estimate_lambda(nls_end, N, o);
  std::vector<size_t> win = window(ns, std::max<long>(1, N / 10), N);
  Rate rs = fit_rate("sigma_window", ns, win, median_of(nls), T, o, 20);
  growth(rs);
  Rate re = fit_rate("eigen_distance", ns, win, median_of(edist), T, o, 21);
  Rate rr = fit_rate("rho2_over_rho1", ns, win, median_of(lrat), T, o, 22);
  rep.rates = {re, rr, rs};
  double ref = rate_reference(s, lam, rs);
  size_t k_ref = static_cast<size_t>(
      std::find(ns.begin(), ns.end(), n_ref) - ns.begin());
  std::vector<double> g_end = column(rgap, all, K2 - 1), g_ref = column(rgap, all, k_ref);
  double m_end = median_mid(g_end), m_ref = median_mid(g_ref);
  double ratio = std::abs(m_end - m_ref) <= 1e-12 ? 1.0 : m_end / m_ref;
  rep.scalars = {{"lambda_hat", lam.value},
                 {"lambda_window", rs.value},
                 {"rate_reference", ref},
                 {"median_rho_gap_final", m_end},
                 {"median_rho_gap_ref", m_ref},
                 {"sample_median_rho_gap_final", quant(g_end, 0.5)},
                 {"sample_median_rho_gap_ref", quant(g_ref, 0.5)},
                 {"n_ref", static_cast<double>(n_ref)}};
  bool stat_ok = std::isfinite(ratio) && ratio > 0 && ratio <= prm.stationarity &&
                 ratio >= 1.0 / prm.stationarity;
  rep.checks.push_back(make_check("rho_gap_stationary", stat_ok, ratio,
                                  prm.stationarity,
                                  "median-interval midpoint of rho_gap, last step over reference step"));
  if (std::isfinite(ref) && ref > 1e-6) {
    double frac = re.value / ref;
    rep.checks.push_back(make_check("eigen_rate", std::isfinite(frac) &&
                                                      frac >= prm.eigen_rate_frac,
                                    frac, prm.eigen_rate_frac,
                                    "eigen-direction decay rate over lambda"));
  }
  rep.wall_seconds = timer.seconds();
  return rep;
}

// ---------------------------------------------------------------------------

ExperimentReport run_rank_kernel(const DistributionSpec& s,
                                 const ExperimentOptions& o, const RankParams& prm) {
  check_options(s, o);
  const int d = s.dim;
  std::vector<std::vector<double>> probes = prm.probes;
  if (probes.empty())
    for (int i = 0; i < d; ++i) probes.push_back(basis(d, i));
  for (const auto& v : probes) check_vector(v, d, "probe");
  Timer timer;
  ExperimentReport rep = base_report("rank", s, o);
  const long T = o.trajectories, N = o.steps;
  const size_t P = probes.size();
  std::vector<std::vector<int8_t>> rank(T, std::vector<int8_t>(N + 1));
  std::vector<std::vector<uint8_t>> kill(T, std::vector<uint8_t>((N + 1) * P));
  std::vector<long> increases(T, 0);
  parallel_for(T, o.threads, [&](long t) {
    Stream r(o.seed, tag::kTrajectory, static_cast<uint64_t>(t));
    Walk w(d);
    for (long n = 0; n <= N; ++n) {
      rank[t][n] = static_cast<int8_t>(w.rank());
      if (n > 0 && rank[t][n] > rank[t][n - 1]) ++increases[t];
      for (size_t i = 0; i < P; ++i)
        kill[t][n * P + i] = w.log_image(probes[i]) == -kInf ? 1 : 0;
      if (n < N) w.step(s.draw(r));
    }
  });
  long violations = std::accumulate(increases.begin(), increases.end(), 0L);
  std::vector<long> term(d + 1, 0);
  for (long t = 0; t < T; ++t) ++term[rank[t][N]];
  int mode = static_cast<int>(std::max_element(term.begin(), term.end()) - term.begin());
  // n_gamma: first n with the terminal rank.
  std::vector<long> ngam(T);
  for (long t = 0; t < T; ++t) {
    long n = 0;
    while (rank[t][n] != rank[t][N]) ++n;
    ngam[t] = n;
  }
  auto law = exact_rank_law(s, N);
  Curve cr{"rank_law", {}}, cs{"stabilization", {}}, cz{"zero_product", {}},
      ck{"probe_kernel", {}};
  std::vector<double> tail(N + 1), zero(N + 1);
  const double Td = static_cast<double>(T);
  for (long n = 0; n <= N; ++n) {
    std::vector<long> cnt(d + 1, 0);
    long above = 0;
    for (long t = 0; t < T; ++t) {
      ++cnt[rank[t][n]];
      if (ngam[t] > n) ++above;
    }
    for (int r = 0; r <= d; ++r) {
      stats::Interval w = stats::wilson(cnt[r], Td);
      cr.rows.push_back({n, "P(rank=" + std::to_string(r) + ")", cnt[r] / Td, w.lo, w.hi});
    }
    tail[n] = above / Td;
    zero[n] = cnt[0] / Td;
    stats::Interval w = stats::wilson(above, Td);
    cs.rows.push_back({n, "P(n_gamma>n)", tail[n], w.lo, w.hi});
    stats::Interval wz = stats::wilson(cnt[0], Td);
    cz.rows.push_back({n, "P(zero)", zero[n], wz.lo, wz.hi});
    if (law) {
      double pa = 0;
      for (int r = mode + 1; r <= d; ++r) pa += (*law)[n][r];
      cs.rows.push_back({n, "exact", pa, kNaN, kNaN});
      cz.rows.push_back({n, "exact", (*law)[n][0], kNaN, kNaN});
    }
    for (size_t i = 0; i < P; ++i) {
      long k = 0;
      for (long t = 0; t < T; ++t) k += kill[t][n * P + i];
      stats::Interval wk = stats::wilson(k, Td);
      ck.rows.push_back({n, "probe" + std::to_string(i), k / Td, wk.lo, wk.hi});
    }
  }
  rep.curves = {cr, cs, cz, ck};
  std::vector<long> ns = identity_index(N + 1);
  Statistic logtail = [&](const std::vector<long>& idx, size_t k) {
    long a = 0;
    for (long t : idx)
      if (ngam[t] > static_cast<long>(k)) ++a;
    return a > 0 ? std::log(static_cast<double>(a) / idx.size()) : kNaN;
  };
  rep.rates.push_back(fit_rate("stabilization_tail", ns, proportion_window(ns, tail),
                               logtail, T, o, 30));
  long sum_ngam = 0;
  for (long n : ngam) sum_ngam += n;
  double mean_ngam = static_cast<double>(sum_ngam) / Td;
  rep.scalars = {{"eventual_rank", static_cast<double>(mode)},
                 {"terminal_mode_fraction", term[mode] / Td},
                 {"mean_n_gamma", mean_ngam},
                 {"rank_increases", static_cast<double>(violations)}};

  rep.checks.push_back(make_check("rank_non_increasing", violations == 0,
                                  static_cast<double>(violations), 0.0,
                                  "pathwise rank increases"));
  rep.checks.push_back(make_check("terminal_rank_unanimous", term[mode] == T,
                                  term[mode] / Td, 1.0,
                                  "fraction of trajectories at the modal terminal rank"));
  // P(gamma_n v = 0) non-decreasing in n, up to 3 standard errors.
  double worst = 0;
  for (size_t i = 0; i < P; ++i) {
    double prev = 0;
    for (long n = 0; n <= N; ++n) {
      long k = 0;
      for (long t = 0; t < T; ++t) k += kill[t][n * P + i];
      double p = k / Td;
      if (n > 0) {
        double se = std::sqrt((p * (1 - p) + prev * (1 - prev)) / Td);
        double z = se > 0 ? (prev - p) / se : (prev > p ? kInf : 0.0);
        worst = std::max(worst, z);
      }
      prev = p;
    }
  }
  // Bonferroni bound over all N * P comparisons at family level 0.01.
  double zb = boost::math::quantile(
      boost::math::normal(), 1.0 - 0.01 / static_cast<double>(std::max<size_t>(1, N * P)));
  rep.checks.push_back(make_check("probe_monotone", worst <= zb, worst, zb,
                                  "largest standardized decrease of P(gamma_n v = 0)"));
  if (law) {
    long n_max = std::min(prm.n_check, N);
    // Normal z, or with exact = true the two-sided binomial p-value mapped to
    // a z-score whenever T p (1 - p) < 9 and the normal band is unreliable.
    auto band = [&](const std::vector<double>& emp, auto&& law_at, bool exact) {
      double z_max = 0;
      for (long n = 0; n <= n_max; ++n) {
        double p = law_at(n);
        double se = std::sqrt(p * (1 - p) / Td);
        double dev = std::abs(emp[n] - p);
        double z = se > 0 ? dev / se : (dev > 1e-12 ? kInf : 0.0);
        if (exact && se > 0 && Td * p * (1 - p) < 9) {
          boost::math::binomial bin(Td, p);
          double k = std::round(emp[n] * Td);
          double lo = boost::math::cdf(bin, k);
          double hi = k > 0 ? boost::math::cdf(boost::math::complement(bin, k - 1)) : 1.0;
          double pv = std::min(1.0, 2 * std::min(lo, hi));
          z = pv > 0 ? boost::math::quantile(boost::math::complement(boost::math::normal(), pv / 2))
                     : kInf;
        }
        z_max = std::max(z_max, z);
      }
      return z_max;
    };
    auto tail_law = [&](long n) {
      double pa = 0;
      for (int r = mode + 1; r <= d; ++r) pa += (*law)[n][r];
      return pa;
    };
    auto zero_law = [&](long n) { return (*law)[n][0]; };
    double zt = band(tail, tail_law, true);
    double zz = band(zero, zero_law, true);
    rep.scalars.emplace_back("stabilization_max_z", zt);
    rep.scalars.emplace_back("zero_max_z", zz);
    rep.scalars.emplace_back("stabilization_max_z_normal", band(tail, tail_law, false));
    rep.scalars.emplace_back("zero_max_z_normal", band(zero, zero_law, false));
    rep.checks.push_back(make_check("stabilization_vs_exact", zt <= 3.0, zt, 3.0,
                                    "largest |z| of P(n_gamma>n) against the exact law"));
    rep.checks.push_back(make_check("zero_vs_exact", zz <= 3.0, zz, 3.0,
                                    "largest |z| of P(product = 0) against the exact law"));
  }
  rep.wall_seconds = timer.seconds();
  return rep;
}

// ---------------------------------------------------------------------------

ExperimentReport run_mixing(const DistributionSpec& s, const ExperimentOptions& o,
                            const MixingParams& prm) {
  check_options(s, o);
  const int d = s.dim;
  std::vector<std::vector<double>> init = prm.initial;
  if (init.empty()) init = {basis(d, 0), basis(d, 1)};
  for (const auto& x : init) check_vector(x, d, "initial point");
  // Coordinates (i, j), i <= j, of x -> x x^T / |x|^2.
  // (-1, -1) is the constant function 1.
  std::vector<std::pair<int, int>> fs;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) fs.emplace_back(i, j);
  if (prm.include_constant) fs.emplace_back(-1, -1);
  const size_t F = fs.size(), X = init.size();
  Timer timer;
  ExperimentReport rep = base_report("mixing", s, o);
  const long T = o.trajectories, N = o.steps;
  std::vector<long> ns = checkpoints(N, o.points);
  const size_t K = ns.size();
  // diff[x * F + f][t][k] = f([gamma_n x]) - f(l_inf) on trajectory t.
  std::vector<std::vector<std::vector<double>>> diff(
      X * F, std::vector<std::vector<double>>(T, std::vector<double>(K, kNaN)));
  parallel_for(T, o.threads, [&](long t) {
    Path p = simulate(s, o.seed, t, N, ns, true);
    std::vector<double> u;
    std::vector<std::vector<double>> xi = pulled_back_limit(p, ns, &u);
    if (u.empty()) return;
    for (size_t k = 0; k < K; ++k) {
      const Walk& w = p.snaps[k];
      for (size_t a = 0; a < X; ++a) {
        const std::vector<double>& x = init[a];
        double lx = w.log_image(x);
        if (!std::isfinite(lx)) continue;
        std::vector<double> img(d, 0.0);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) img[i] += w.unit()(i, j) * x[j];
        double ni = vec_norm(img);
        for (double& c : img) c /= ni;
        for (size_t fi = 0; fi < F; ++fi) {
          auto [i, j] = fs[fi];
          double val;
          if (i < 0) {
            val = 1.0 - 1.0;
          } else if (d == 2) {
            // img = c u + s u_perp up to sign, with s from the exterior power.
            double ldist = w.log_image_dist(x, xi[k]);
            double mag = std::isfinite(ldist) ? std::exp(ldist) : 0.0;
            std::vector<double> gxi(2, 0.0);
            for (int r = 0; r < 2; ++r)
              for (int c = 0; c < 2; ++c) gxi[r] += w.unit()(r, c) * xi[k][c];
            double kap = gxi[0] * u[0] + gxi[1] * u[1] >= 0 ? 1.0 : -1.0;
            double wedge = w.image_orientation(x, xi[k]) * kap * mag;
            double dot = img[0] * u[0] + img[1] * u[1];
            double sn = -wedge * (dot >= 0 ? 1.0 : -1.0);
            double cs = std::sqrt(std::max(0.0, 1 - sn * sn));
            std::vector<double> up = {-u[1], u[0]};
            val = sn * sn * (up[i] * up[j] - u[i] * u[j]) +
                  cs * sn * (u[i] * up[j] + up[i] * u[j]);
          } else {
            val = img[i] * img[j] - u[i] * u[j];
          }
          diff[a * F + fi][t][k] = val;
        }
      }
    }
  });
  const std::vector<long> all = identity_index(T);
  for (long t = 0; t < T; ++t)
    if (std::isnan(diff[0][t][K - 1])) ++rep.excluded;
  Curve cg{"mixing_gap", {}};
  auto fname = [&](size_t fi) -> std::string {
    if (fs[fi].first < 0) return "const";
    return "xx" + std::to_string(fs[fi].first) + std::to_string(fs[fi].second);
  };
  uint64_t salt = 40;
  std::vector<Rate> rates(X * F);
  bool const_zero = true;
  for (size_t a = 0; a < X; ++a) {
    for (size_t fi = 0; fi < F; ++fi) {
      const auto& D = diff[a * F + fi];
      std::string stat = "x" + std::to_string(a) + ":" + fname(fi);
      std::vector<size_t> win;
      bool open = true, sig0 = false, noise_end = false;
      for (size_t k = 0; k < K; ++k) {
        std::vector<double> v = column(D, all, k);
        double sd = 0, m = finite_mean(v, &sd);
        double se = v.size() > 1 ? sd / std::sqrt(static_cast<double>(v.size())) : kNaN;
        cg.rows.push_back({ns[k], stat, m, m - 1.959963984540054 * se,
                           m + 1.959963984540054 * se});
        if (fs[fi].first < 0) {
          const_zero = const_zero && (m == 0.0 || std::isnan(m));
          continue;
        }
        if (k == 0) sig0 = std::abs(m) > 3 * se;
        if (k + 1 == K) noise_end = !(std::abs(m) > 3 * se);
        if (!open) continue;
        if (std::abs(m) > 3 * se && m != 0)
          win.push_back(k);
        else
          open = false;
      }
      if (fs[fi].first < 0) continue;
      Statistic lg = [&D](const std::vector<long>& idx, size_t k) {
        double m = finite_mean(column(D, idx, k));
        return m != 0 && std::isfinite(m) ? std::log(std::abs(m)) : kNaN;
      };
      rates[a * F + fi] = fit_rate(stat, ns, win, lg, T, o, salt++);
      rep.rates.push_back(rates[a * F + fi]);
      const Rate& r = rates[a * F + fi];
      bool fitted = r.points >= 3 && r.ci_lo > 0;
      rep.checks.push_back(make_check(
          "gap_decays_" + stat, fitted || noise_end, fitted ? r.ci_lo : kNaN, 0.0,
          fitted ? "decay rate CI lower end"
                 : (sig0 ? "gap fell to noise level too fast to fit"
                         : "gap at noise level throughout")));
    }
  }
  if (prm.include_constant)
    rep.checks.push_back(make_check("constant_zero", const_zero, 0.0, 0.0,
                                    "gap of the constant function"));
  for (size_t fi = 0; fi < F && X > 1; ++fi) {
    if (fs[fi].first < 0) continue;
    bool ok = true, any = false;
    double worst = 0;
    for (size_t a = 1; a < X; ++a) {
      const Rate& r0 = rates[fi];
      const Rate& r1 = rates[a * F + fi];
      if (std::isnan(r0.ci_lo) || std::isnan(r1.ci_lo)) continue;
      any = true;
      bool overlap = r0.ci_lo <= r1.ci_hi && r1.ci_lo <= r0.ci_hi;
      ok = ok && overlap;
      worst = std::max(worst, std::abs(r0.value - r1.value));
    }
    if (any)
      rep.checks.push_back(make_check("rate_agreement_" + fname(fi), ok, worst, 0.0,
                                    "bootstrap CIs of the rates overlap"));
  }
  rep.curves = {cg};
  rep.wall_seconds = timer.seconds();
  return rep;
}

}  // namespace pivotal::exp
