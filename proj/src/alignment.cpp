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

#include "pivotal/alignment.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "json.hpp"
#include "pivotal/error.hpp"
#include "pivotal/parallel.hpp"
#include "pivotal/random_mat.hpp"
#include "pivotal/rng.hpp"

namespace pivotal::align {

double ConstantsLedger::amp_chain(double e, int n) {
  return std::pow(4 / (e * e), n);
}

namespace {

class Judge {
 public:
  explicit Judge(Verdict& v) : v_(v) { v_.margin = INFINITY; }
  void le(const char* name, double lhs, double rhs) {
    record(name, lhs, rhs, rhs - lhs);
  }
  void ge(const char* name, double lhs, double rhs) {
    record(name, lhs, rhs, lhs - rhs);
  }

 private:
  void record(const char* name, double lhs, double rhs, double m) {
    if (std::isnan(m)) m = -INFINITY;
    if (m < v_.margin) {
      v_.margin = m;
      v_.lhs = lhs;
      v_.rhs = rhs;
      v_.conclusion = name;
    }
    if (m < -kSlack) v_.pass = false;
  }
  Verdict& v_;
};

Verdict start(const char* lemma) {
  Verdict v;
  v.lemma = lemma;
  return v;
}

Verdict inapplicable(Verdict v) {
  v.applicable = false;
  v.pass = true;
  v.margin = 0;
  return v;
}

double ratio(const Mat& g, const Mat& h) { return alignment_ratio(g, h); }

Mat col(const std::vector<double>& x) { return Mat::column(x); }

std::vector<double> top_left(const Mat& g) { return singular_data(g).left; }

std::vector<double> as_vec(const Mat& m) { return m.entries(); }

// Product g_a ... g_{b-1}, rescaled to unit norm; log of the scale in *ls.
Mat product(const std::vector<Mat>& gs, size_t a, size_t b, double* ls) {
  Mat p = gs[a];
  double acc = 0;
  p = normalized(p, &acc);
  for (size_t k = a + 1; k < b; ++k) p = normalized(p * gs[k], &acc);
  if (ls) *ls = acc;
  return p;
}

}  // namespace

Verdict check_lipschitz(const Mat& f, const std::vector<double>& x,
                        const std::vector<double>& y) {
  Verdict v = start("lipschitz");
  v.applicable = true;
  Judge j(v);
  double rx = ratio(f, col(x)), ry = ratio(f, col(y));
  j.le("cocycle difference", std::fabs(rx - ry), proj_dist(x, y));
  return v;
}

Verdict check_cone_diameter(const Mat& h, const std::vector<double>& x,
                            double eps) {
  Verdict v = start("cone-diameter");
  if (ratio(h, col(x)) < eps) return inapplicable(v);
  v.applicable = true;
  Judge j(v);
  auto u = top_left(h);
  auto u2 = as_vec(h * col(x));
  j.le("diameter", proj_dist(u, u2), sigma(h) / eps);
  return v;
}

Verdict check_sharp(const Mat& g, const Mat& h, double eps) {
  Verdict v = start("sharp-alignment");
  // Converse direction holds without hypotheses.
  Mat u1 = h * col(singular_data(h).right);
  Mat w1 = Mat::row(top_left(g)) * g;
  double r1 = ratio(w1, u1);
  if (ratio(g, h) < eps) {
    v = inapplicable(v);
    return v;
  }
  v.applicable = true;
  Judge j(v);
  j.ge("converse", ratio(g, h), r1);
  auto sd = singular_data(g * h);
  Mat b = col(sd.right);
  Mat u = h * b;
  Mat w = Mat::row(sd.left) * g;
  j.ge("preimage of u in V cone", ratio(h, b), eps);
  j.ge("preimage of w in V cone", ratio(Mat::row(sd.left), g), eps);
  j.ge("u in U cone", cone_test(h, as_vec(u), eps - kSlack, Cone::U), 1);
  j.ge("w in W cone", cone_test(g, as_vec(w), eps - kSlack, Cone::W), 1);
  j.ge("w A u", ratio(w, u), eps);
  j.ge("g A u", ratio(g, u), eps);
  j.ge("w A h", ratio(w, h), eps);
  return v;
}

Verdict check_c_prod(const Mat& g, const Mat& h, double eps) {
  Verdict v = start("product-contraction");
  if (ratio(g, h) < eps) return inapplicable(v);
  v.applicable = true;
  Mat gh = g * h;
  if (gh.is_zero()) throw InternalError("aligned pair with zero product");
  Judge j(v);
  j.le("sigma of product", sigma(gh), sigma(g) * sigma(h) / (eps * eps));
  j.le("top direction drift", proj_dist(top_left(g), top_left(gh)),
       sigma(g) / eps);
  return v;
}

Verdict check_transmission(const Mat& f, const Mat& g, const Mat& h,
                           double eps) {
  Verdict v = start("transmission");
  if (sigma(g) > ConstantsLedger::sigma_transmission(eps) ||
      ratio(f, g) < eps || ratio(g, h) < eps / 2)
    return inapplicable(v);
  v.applicable = true;
  Judge j(v);
  j.ge("f A gh", ratio(f, g * h), eps / 2);
  return v;
}

Verdict check_triple(const Mat& f, const Mat& g, const Mat& h, double eps) {
  Verdict v = start("triple");
  double sg = sigma(g);
  if (sg > ConstantsLedger::sigma_triple(eps) || ratio(f, g) < eps ||
      ratio(g, h) < eps)
    return inapplicable(v);
  v.applicable = true;
  Judge j(v);
  double s = sigma(f * g * h);
  double amp = ConstantsLedger::amp_triple(eps);
  j.le("sigma of triple product", s, amp * sigma(f) * sg * sigma(h));
  j.le("sigma against middle", s, amp * sg);
  return v;
}

AlignedChain make_chain(std::vector<Mat> links, double eps) {
  if (!(eps > 0 && eps <= 0.5)) throw InputError("chain eps must lie in (0, 1/2]");
  if (links.empty()) throw InputError("empty chain");
  AlignedChain c;
  c.eps = eps;
  c.links = std::move(links);
  for (size_t k = 0; k + 1 < c.links.size(); ++k)
    c.link_aligned.push_back(is_aligned(c.links[k], c.links[k + 1], eps));
  for (const Mat& g : c.links) {
    double s = sigma(g);
    c.sigma.push_back(s);
    if (s <= ConstantsLedger::sigma_schottky(eps))
      c.gate.push_back(SigmaGate::Schottky);
    else if (s <= ConstantsLedger::sigma_rigidity(eps))
      c.gate.push_back(SigmaGate::Rigidity);
    else if (s <= ConstantsLedger::sigma_chain(eps))
      c.gate.push_back(SigmaGate::Chain);
    else
      c.gate.push_back(SigmaGate::None);
  }
  return c;
}

namespace {

bool all_aligned(const AlignedChain& c) {
  for (bool b : c.link_aligned)
    if (!b) return false;
  return true;
}

bool gates_at_least(const AlignedChain& c, size_t a, size_t b, SigmaGate g) {
  for (size_t k = a; k < b; ++k)
    if (static_cast<int>(c.gate[k]) < static_cast<int>(g)) return false;
  return true;
}

}  // namespace

ChainVerdict check_chain(const AlignedChain& c) {
  ChainVerdict out;
  out.chain = start("chain");
  out.partition = start("local-to-global");
  size_t L = c.links.size();
  if (L < 2 || !all_aligned(c)) {
    out.chain = inapplicable(out.chain);
    out.partition = inapplicable(out.partition);
    return out;
  }
  int n = static_cast<int>(L) - 1;
  double e = c.eps;
  const auto& gs = c.links;
  if (gates_at_least(c, 0, L - 1, SigmaGate::Chain)) {
    Verdict& v = out.chain;
    v.applicable = true;
    Judge j(v);
    double ls = 0;
    Mat all = product(gs, 0, L, &ls);
    Mat tail = product(gs, 1, L, nullptr);
    double r = ratio(gs[0], tail);
    j.ge("head alignment", r, e / 2);
    out.head_alignment = r >= e / 2 - kSlack;
    double lognorm = ls;  // log of the norm of the full product
    double logs = 0, sprod = 1;
    for (const Mat& g : gs) {
      logs += std::log(op_norm(g));
      sprod *= c.sigma[&g - &gs[0]];
    }
    double per_step = std::exp((lognorm - logs) / n);
    j.ge("norm bound (per step)", per_step, e / 2);
    out.norm_bound = per_step >= e / 2 - kSlack;
    double s = sigma(all);
    double rhs = ConstantsLedger::amp_chain(e, n) * sprod;
    j.le("sigma bound", s, rhs);
    out.sigma_bound = s <= rhs + kSlack;
  } else {
    out.chain = inapplicable(out.chain);
  }
  if (gates_at_least(c, 1, L - 1, SigmaGate::Rigidity)) {
    Verdict& v = out.partition;
    v.applicable = true;
    Judge j(v);
    for (size_t k = 1; k < L; ++k) {
      Mat left = product(gs, 0, k, nullptr);
      Mat right = product(gs, k, L, nullptr);
      j.ge("split alignment", ratio(left, right), e / 2);
    }
  } else {
    out.partition = inapplicable(out.partition);
  }
  return out;
}

Verdict check_limit_line(const AlignedChain& c) {
  Verdict v = start("limit-line");
  size_t L = c.links.size();
  if (L < 2 || !all_aligned(c) || !gates_at_least(c, 1, L, SigmaGate::Chain))
    return inapplicable(v);
  v.applicable = true;
  Judge j(v);
  std::vector<std::vector<double>> u;
  std::vector<double> s;
  Mat p = normalized(c.links[0]);
  for (size_t k = 1; k <= L; ++k) {
    if (k > 1) p = normalized(p * c.links[k - 1]);
    u.push_back(top_left(p));
    s.push_back(sigma(p));
  }
  for (size_t k = 0; k < u.size(); ++k)
    for (size_t m = k + 1; m < u.size(); ++m)
      j.le("prefix direction drift", proj_dist(u[k], u[m]),
           ConstantsLedger::amp_limit(c.eps) * s[k]);
  return v;
}

LimitLine limit_line(const AlignedChain& c, double tol) {
  LimitLine out;
  Mat p;
  for (size_t k = 1; k <= c.links.size(); ++k) {
    p = k == 1 ? normalized(c.links[0]) : normalized(p * c.links[k - 1]);
    double b = ConstantsLedger::amp_limit(c.eps) * sigma(p);
    out.bounds.push_back(b);
    if (!out.reached_tol) {
      out.l_inf = ProjPoint(top_left(p));
      out.used = static_cast<int>(k);
      if (b < tol) out.reached_tol = true;
    }
  }
  return out;
}

Verdict check_eigen_align(const Mat& g, double eps) {
  Verdict v = start("eigen-alignment");
  double s = sigma(g);
  if (s > ConstantsLedger::sigma_chain(eps) || ratio(g, g) < eps)
    return inapplicable(v);
  v.applicable = true;
  SpectralData sd = spectral(g);
  if (!sd.has_top_eigen)
    throw InternalError("power iteration did not settle on an aligned contracting matrix");
  Judge j(v);
  double n = op_norm(g);
  j.ge("spectral radius", sd.rho1 / n, eps / 2);
  j.le("eigenvalue gap", sd.rho2 / sd.rho1, 4 * s / (eps * eps));
  j.le("eigen direction", proj_dist(top_left(g), sd.top_eigen.coords()),
       2 * s / eps);
  return v;
}

Verdict check_rigidity(const Mat& f, const Mat& g1, const Mat& g2,
                       const Mat& h, double eps) {
  Verdict v = start("rigidity");
  double t = ConstantsLedger::sigma_rigidity(eps);
  if (sigma(g1) > t || sigma(g2) > t || ratio(f, g1) < eps / 2 ||
      ratio(g1, g2) < eps || ratio(g2, h) < eps / 2)
    return inapplicable(v);
  v.applicable = true;
  Judge j(v);
  j.ge("fg1 A g2h", ratio(f * g1, g2 * h), eps / 2);
  return v;
}

Verdict check_alternating(const Mat& gm1, const std::vector<Mat>& gs,
                          const Mat& f, const Mat& h, double eps) {
  Verdict v = start("alternating");
  if (gs.size() % 2 != 1) throw InputError("alternating family needs 2n+1 blocks");
  size_t n = gs.size() / 2;
  double ts = ConstantsLedger::sigma_schottky(eps);
  if (ratio(gm1, gs[0]) < eps ||
      sigma(gs[0]) > ConstantsLedger::sigma_rigidity(eps))
    return inapplicable(v);
  Mat p = normalized(gs[0]);
  for (size_t i = 0; i < n; ++i) {
    const Mat& odd = gs[2 * i + 1];
    if (sigma(odd) > ts || ratio(p, odd) < eps || ratio(odd, gs[2 * i + 2]) < eps)
      return inapplicable(v);
    p = normalized(p * odd * gs[2 * i + 2]);
  }
  v.applicable = true;
  Judge j(v);
  j.ge("g_-1 A product", ratio(gm1, p), eps / 2);
  j.le("sigma of product", sigma(p), sigma(gs[0]));
  if (!f.empty() && !h.empty() && sigma(gm1) <= ts &&
      ratio(f, gm1) >= eps / 2 && ratio(p, h) >= eps / 2) {
    j.ge("f g_-1 A product h", ratio(f * gm1, p * h), eps / 2);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Random suites.

const std::vector<Lemma>& all_lemmas() {
  static const std::vector<Lemma> v = {
      Lemma::Lipschitz,    Lemma::ConeDiameter, Lemma::Sharp,
      Lemma::CProd,        Lemma::Transmission, Lemma::Triple,
      Lemma::Chain,        Lemma::LimitLine,    Lemma::Rigidity,
      Lemma::Partition,    Lemma::Alternating,  Lemma::EigenAlign};
  return v;
}

std::string lemma_id(Lemma l) {
  switch (l) {
    case Lemma::Lipschitz: return "lipschitz";
    case Lemma::ConeDiameter: return "cone-diameter";
    case Lemma::Sharp: return "sharp-alignment";
    case Lemma::CProd: return "product-contraction";
    case Lemma::Transmission: return "transmission";
    case Lemma::Triple: return "triple";
    case Lemma::Chain: return "chain";
    case Lemma::LimitLine: return "limit-line";
    case Lemma::Rigidity: return "rigidity";
    case Lemma::Partition: return "local-to-global";
    case Lemma::Alternating: return "alternating";
    case Lemma::EigenAlign: return "eigen-alignment";
  }
  return "?";
}

Lemma lemma_from_id(const std::string& id) {
  for (Lemma l : all_lemmas())
    if (lemma_id(l) == id) return l;
  throw InputError("unknown lemma id: " + id);
}

namespace {

// Householder reflection taking unit a to unit c.
Mat reflector(const std::vector<double>& a, const std::vector<double>& c) {
  int d = static_cast<int>(a.size());
  std::vector<double> w(d);
  double nn = 0;
  for (int i = 0; i < d; ++i) {
    w[i] = a[i] - c[i];
    nn += w[i] * w[i];
  }
  Mat q = Mat::identity(d);
  if (nn < 1e-30) return q;
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) q(i, k) -= 2 * w[i] * w[k] / nn;
  return q;
}

class Gen {
 public:
  Gen(Stream& r, int d) : r_(r), d_(d) {}

  // sigma <= t (rank one now and then).
  Mat contracted(double t) {
    double q = r_.uniform() < 0.05 ? 0.0 : t * (1 - 1e-9);
    return contracted_mat(d_, q, r_);
  }
  Mat generic() {
    if (r_.uniform() < 0.5) return gaussian_mat(d_, d_, r_);
    return contracted_mat(d_, r_.uniform(), r_);
  }
  // b from make() with left A^level b, by rejection then by rotation.
  Mat right_partner(const Mat& left, const std::function<Mat()>& make,
                    double level) {
    for (int t = 0; t < 32; ++t) {
      Mat b = make();
      if (ratio(left, b) >= level) return b;
    }
    Mat b = make();
    auto sb = singular_data(b);
    auto sl = singular_data(left);
    return reflector(sb.left, sl.right) * b;
  }
  Mat left_partner(const Mat& right, const std::function<Mat()>& make,
                   double level) {
    auto tmake = [&] { return make().transpose(); };
    return right_partner(right.transpose(), tmake, level).transpose();
  }
  std::vector<double> vec() {
    std::vector<double> x(d_);
    for (double& c : x) c = r_.normal();
    return x;
  }
  double uniform() { return r_.uniform(); }
  uint64_t below(uint64_t n) { return r_.below(n); }
  int d() const { return d_; }

 private:
  Stream& r_;
  int d_;
};

Verdict draw_instance(Lemma lemma, Gen& G) {
  using C = ConstantsLedger;
  double eps_wide = 0.05 + 0.9 * G.uniform();
  double eps_chain = 0.05 + 0.45 * G.uniform();
  auto generic = [&] { return G.generic(); };
  switch (lemma) {
    case Lemma::Lipschitz: {
      Mat f = G.uniform() < 0.25 ? Mat::row(G.vec()) : G.generic();
      auto x = G.vec();
      std::vector<double> y;
      if (G.uniform() < 0.5) {
        y = G.vec();
      } else {
        double t = std::pow(10.0, -6 * G.uniform());
        auto z = G.vec();
        y = x;
        for (size_t i = 0; i < y.size(); ++i) y[i] += t * z[i];
      }
      return check_lipschitz(f, x, y);
    }
    case Lemma::ConeDiameter: {
      Mat h = G.generic();
      std::vector<double> x = G.vec();
      for (int t = 0; t < 32 && ratio(h, col(x)) < eps_wide; ++t) x = G.vec();
      if (ratio(h, col(x)) < eps_wide) x = singular_data(h).right;
      return check_cone_diameter(h, x, eps_wide);
    }
    case Lemma::Sharp: {
      Mat g = G.generic();
      Mat h = G.right_partner(g, generic, eps_wide);
      return check_sharp(g, h, eps_wide);
    }
    case Lemma::CProd: {
      Mat g = G.generic();
      Mat h = G.right_partner(g, generic, eps_wide);
      return check_c_prod(g, h, eps_wide);
    }
    case Lemma::Transmission: {
      double e = eps_wide;
      Mat g = G.contracted(C::sigma_transmission(e));
      Mat f = G.left_partner(g, generic, e);
      Mat h = G.right_partner(g, generic, e / 2);
      return check_transmission(f, g, h, e);
    }
    case Lemma::Triple: {
      double e = eps_wide;
      Mat g = G.contracted(C::sigma_triple(e));
      Mat f = G.left_partner(g, generic, e);
      Mat h = G.right_partner(g, generic, e);
      return check_triple(f, g, h, e);
    }
    case Lemma::Chain:
    case Lemma::Partition:
    case Lemma::LimitLine: {
      double e = eps_chain;
      int n = 1 + static_cast<int>(G.below(11));
      double t = lemma == Lemma::Partition ? C::sigma_rigidity(e) : C::sigma_chain(e);
      auto inner = [&] { return G.contracted(t); };
      std::vector<Mat> gs;
      gs.push_back(lemma == Lemma::Chain ? G.contracted(t) : G.generic());
      for (int k = 1; k <= n; ++k) {
        bool last = k == n;
        bool free_last = last && lemma != Lemma::LimitLine && G.uniform() < 0.5;
        if (free_last)
          gs.push_back(G.right_partner(gs.back(), generic, e));
        else
          gs.push_back(G.right_partner(gs.back(), inner, e));
      }
      AlignedChain c = make_chain(std::move(gs), e);
      if (lemma == Lemma::LimitLine) return check_limit_line(c);
      ChainVerdict cv = check_chain(c);
      return lemma == Lemma::Chain ? cv.chain : cv.partition;
    }
    case Lemma::Rigidity: {
      double e = eps_wide;
      double t = C::sigma_rigidity(e);
      auto inner = [&] { return G.contracted(t); };
      Mat g1 = G.contracted(t);
      Mat f = G.left_partner(g1, generic, e / 2);
      Mat g2 = G.right_partner(g1, inner, e);
      Mat h = G.right_partner(g2, generic, e / 2);
      return check_rigidity(f, g1, g2, h, e);
    }
    case Lemma::Alternating: {
      double e = eps_wide;
      double ts = C::sigma_schottky(e);
      auto odd = [&] { return G.contracted(ts); };
      int n = static_cast<int>(G.below(4));
      std::vector<Mat> gs;
      gs.push_back(G.contracted(C::sigma_rigidity(e)));
      bool full = G.uniform() < 0.75;
      Mat gm1 = full ? G.left_partner(gs[0], odd, e)
                     : G.left_partner(gs[0], generic, e);
      Mat p = gs[0];
      for (int i = 0; i < n; ++i) {
        Mat o = G.right_partner(p, odd, e);
        Mat nx = G.right_partner(o, generic, e);
        gs.push_back(o);
        gs.push_back(nx);
        p = normalized(p * o * nx);
      }
      Mat f, h;
      if (full) {
        f = G.left_partner(gm1, generic, e / 2);
        h = G.right_partner(p, generic, e / 2);
      }
      return check_alternating(gm1, gs, f, h, e);
    }
    case Lemma::EigenAlign: {
      double e = eps_wide;
      Mat g = G.contracted(C::sigma_chain(e));
      for (int t = 0; t < 32 && ratio(g, g) < e; ++t) g = G.contracted(C::sigma_chain(e));
      if (ratio(g, g) < e) {
        auto sd = singular_data(g);
        g = reflector(sd.left, sd.right) * g;
      }
      return check_eigen_align(g, e);
    }
  }
  throw InternalError("unhandled lemma");
}

}  // namespace

SuiteResult run_suite(Lemma lemma, long instances, uint64_t seed, int threads,
                      bool keep_verdicts) {
  std::vector<Verdict> out(instances);
  std::vector<long> rejected(instances, 0);
  uint64_t base = static_cast<uint64_t>(lemma) << 48;
  parallel_for(instances, threads, [&](long i) {
    for (uint64_t attempt = 0;; ++attempt) {
      if (attempt >= 256) throw InternalError("suite generator keeps missing its hypotheses");
      uint64_t key = base | (static_cast<uint64_t>(i) << 8) | attempt;
      Stream r(seed, tag::kSuite, key);
      Gen G(r, 2 + static_cast<int>(i % 3));
      Verdict v = draw_instance(lemma, G);
      if (!v.applicable) {
        ++rejected[i];
        continue;
      }
      v.seed = key;
      out[i] = std::move(v);
      return;
    }
  });
  SuiteResult res;
  res.lemma = lemma;
  res.instances = instances;
  res.worst_margin = INFINITY;
  for (long i = 0; i < instances; ++i) {
    res.rejected += rejected[i];
    if (!out[i].pass) ++res.violations;
    res.worst_margin = std::min(res.worst_margin, out[i].margin);
  }
  if (keep_verdicts) res.verdicts = std::move(out);
  return res;
}

std::string verdicts_to_json(const std::vector<Verdict>& vs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Verdict& v : vs) {
    arr.push_back({{"lemma", v.lemma},
                   {"seed", v.seed},
                   {"applicable", v.applicable},
                   {"pass", v.pass},
                   {"lhs", v.lhs},
                   {"rhs", v.rhs},
                   {"conclusion", v.conclusion}});
  }
  return arr.dump(1);
}

}  // namespace pivotal::align
