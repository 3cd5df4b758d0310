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


#include "pivotal/schottky.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "json.hpp"
#include "pivotal/error.hpp"
#include "pivotal/random_mat.hpp"

namespace pivotal {

Mat BoundaryAtlas::center(size_t k) const {
  return Mat::column(u.at(k)) * Mat::row(w.at(k));
}

Mat sample_word(const DistributionSpec& dist, int m, Stream& r, std::vector<Mat>* letters) {
  if (m < 1) throw InputError("word length must be positive");
  Mat g;
  for (int i = 0; i < m; ++i) {
    Mat x = dist.sample(r);
    if (letters) letters->push_back(x);
    g = i == 0 ? normalized(x) : normalized(g * x);
  }
  return g;
}

BoundaryAtlas estimate_boundary(const DistributionSpec& dist, const AtlasOptions& opt,
                                uint64_t seed) {
  dist.validate();
  if (opt.n_dirs < 1 || opt.horizon < 1 || opt.candidates < opt.n_dirs)
    throw InputError("atlas needs n_dirs >= 1, horizon >= 1 and enough candidates");
  struct Cand {
    std::vector<double> u, w;
    double q;
  };
  std::vector<Cand> cands;
  for (int i = 0; i < opt.candidates; ++i) {
    Stream r(seed, tag::kBoundary, i);
    Mat g = sample_word(dist, opt.horizon, r);
    if (g.is_zero() || !g.all_finite()) continue;
    double q = sigma(g);
    if (q > opt.quality_max) continue;
    Svd s = svd(g);
    Cand c;
    for (int k = 0; k < g.rows(); ++k) c.u.push_back(s.u(k, 0));
    for (int k = 0; k < g.cols(); ++k) c.w.push_back(s.v(k, 0));
    c.q = q;
    cands.push_back(std::move(c));
  }
  if (static_cast<int>(cands.size()) < opt.n_dirs)
    throw ConstructionError("insufficient proximality/irreducibility at this horizon: " +
                            std::to_string(cands.size()) + " of " +
                            std::to_string(opt.candidates) + " products have sigma <= " +
                            std::to_string(opt.quality_max));
  auto gap = [&](size_t a, size_t b) {
    return std::min(proj_dist(cands[a].u, cands[b].u), proj_dist(cands[a].w, cands[b].w));
  };
  std::vector<size_t> chosen{0};
  std::vector<double> near(cands.size(), 2.0);
  double separation = 2.0;
  while (static_cast<int>(chosen.size()) < opt.n_dirs) {
    size_t best = 0;
    double bd = -1;
    for (size_t i = 0; i < cands.size(); ++i) {
      near[i] = std::min(near[i], gap(i, chosen.back()));
      if (near[i] > bd) {
        bd = near[i];
        best = i;
      }
    }
    if (bd < opt.separation_floor)
      throw ConstructionError(
          "insufficient proximality/irreducibility at this horizon: separation " +
          std::to_string(bd) + " below the floor " + std::to_string(opt.separation_floor) +
          " with " + std::to_string(chosen.size()) + " directions");
    separation = std::min(separation, bd);
    chosen.push_back(best);
  }
  BoundaryAtlas a;
  a.dim = dist.dim;
  a.horizon = opt.horizon;
  a.separation = opt.n_dirs > 1 ? separation : 0.0;
  for (size_t i : chosen) {
    a.u.push_back(cands[i].u);
    a.w.push_back(cands[i].w);
    a.quality.push_back(cands[i].q);
  }
  return a;
}

double delta_of(double eps) { return std::pow(eps, 6) / 48; }

double center_distance(const Mat& g, const Mat& pi) {
  if (g.rows() != pi.rows() || g.cols() != pi.cols()) throw InputError("shape mismatch");
  double gp = 0;
  for (size_t i = 0; i < g.entries().size(); ++i) gp += g.entries()[i] * pi.entries()[i];
  double ng = g.frobenius(), np = pi.frobenius();
  if (ng == 0 || np == 0) throw DomainError("distance to a zero matrix");
  double c = gp / (ng * np);
  return std::sqrt(std::max(0.0, 1 - c * c));
}

std::vector<int> SchottkyModel::clusters_of(const Mat& g) const {
  std::vector<int> out;
  if (g.is_zero() || !g.all_finite()) return out;
  if (sigma(g) > delta) return out;
  for (size_t k = 0; k < centers.size(); ++k)
    if (center_distance(g, centers[k]) <= radius) out.push_back(static_cast<int>(k));
  return out;
}

double SchottkyModel::density(const Mat& g) const {
  double f = 0;
  for (int k : clusters_of(g)) f += 1 / masses[k];
  return f / static_cast<double>(centers.size());
}

void SchottkyModel::validate() const {
  dist.validate();
  if (centers.empty() || masses.size() != centers.size() || pool.size() != centers.size())
    throw InputError("model needs matching centers, masses and pools");
  if (!(rho > 0 && rho < 0.2)) throw InputError("rho must lie in (0, 1/5)");
  if (!(eps > 0 && eps <= 1)) throw InputError("eps must lie in (0, 1]");
  if (m < 1) throw InputError("m must be positive");
  double lo = 1;
  for (size_t k = 0; k < masses.size(); ++k) {
    if (!(masses[k] > 0 && masses[k] <= 1)) throw InputError("cluster masses must lie in (0, 1]");
    if (pool[k].empty()) throw InputError("empty cluster pool");
    lo = std::min(lo, masses[k]);
  }
  // alpha f <= alpha N / (N min mass) <= 1.
  if (!(alpha > 0 && alpha <= lo)) throw InputError("alpha must lie in (0, min cluster mass]");
}

namespace {

SchottkyMeasure<Mat> pooled(const std::vector<std::vector<Mat>>& pool, int cap, double rho) {
  std::vector<Mat> atoms;
  std::vector<double> w;
  for (const auto& members : pool) {
    size_t n = std::min<size_t>(members.size(), static_cast<size_t>(std::max(cap, 1)));
    for (size_t i = 0; i < n; ++i) {
      atoms.push_back(members[i]);
      w.push_back(1.0 / (static_cast<double>(n) * pool.size()));
    }
  }
  return SchottkyMeasure<Mat>::finite(std::move(atoms), std::move(w), rho);
}

Adversaries adversaries_for(int d, const std::vector<Mat>& centers, int random_count,
                            int angles, uint64_t seed) {
  Adversaries a;
  for (int i = 0; i < angles; ++i) {
    std::vector<double> x;
    if (d == 2) {
      double t = std::numbers::pi * i / angles;
      x = {std::cos(t), std::sin(t)};
    } else {
      Stream r(seed, tag::kAdversary, i);
      x = random_unit(d, r);
    }
    a.left.push_back(Mat::row(x));
    a.right.push_back(Mat::column(x));
  }
  for (const Mat& c : centers) {
    a.left.push_back(c);
    a.right.push_back(c);
    if (d == 2) {
      // The worst covector for the column space and vector for the row space.
      Svd s = svd(c);
      a.left.push_back(Mat::row({-s.u(1, 0), s.u(0, 0)}));
      a.right.push_back(Mat::column({-s.v(1, 0), s.v(0, 0)}));
    }
  }
  for (int i = 0; i < random_count; ++i) {
    Stream r(seed, tag::kAdversary, 1000000 + i);
    Mat g = gaussian_mat(d, d, r);
    a.left.push_back(g);
    a.right.push_back(g);
  }
  std::erase_if(a.left, [](const Mat& g) { return g.is_zero(); });
  std::erase_if(a.right, [](const Mat& g) { return g.is_zero(); });
  return a;
}

}  // namespace

SchottkyMeasure<Mat> model_measure(const SchottkyModel& model, int cap) {
  return pooled(model.pool, cap, model.rho);
}

Adversaries default_adversaries(const SchottkyModel& model, int random_count, int angles,
                                uint64_t seed) {
  return adversaries_for(model.dim(), model.centers, random_count, angles, seed);
}

SchottkyReport verify_schottky(const SchottkyModel& model, const Adversaries& adv, double rho,
                               int budget) {
  if (budget < 1) throw InputError("budget must be positive");
  int cap = std::max(1, budget / static_cast<int>(model.pool.size()));
  return verify_measure(model.semigroup(), model_measure(model, cap), adv.left, adv.right, rho);
}

SchottkyModel build_schottky(const DistributionSpec& dist, const BuildOptions& opt,
                             uint64_t seed) {
  dist.validate();
  if (!(opt.rho > 0 && opt.rho < 0.2)) throw InputError("rho must lie in (0, 1/5)");
  if (opt.m_max < 1 || opt.samples < 1 || opt.eps_grid.empty())
    throw InputError("empty search range");
  BoundaryAtlas atlas = estimate_boundary(dist, opt.atlas, derive_seed(seed, 1));
  std::vector<Mat> centers;
  for (size_t k = 0; k < atlas.size(); ++k) centers.push_back(atlas.center(k));
  const size_t N = centers.size();
  const int need = static_cast<int>(std::ceil(1 / opt.rho - 1e-9));
  std::vector<SearchPoint> log;
  SearchPoint best;
  for (int m = 1; m <= opt.m_max; ++m) {
    const uint64_t ms = derive_seed(seed, 100 + m);
    std::vector<Mat> prods(opt.samples);
    std::vector<double> sig(opt.samples, 1.0);
    std::vector<std::vector<double>> dist_to(opt.samples);
    for (int i = 0; i < opt.samples; ++i) {
      Stream r(ms, tag::kSchottky, i);
      prods[i] = sample_word(dist, m, r);
      if (prods[i].is_zero() || !prods[i].all_finite()) continue;
      sig[i] = sigma(prods[i]);
      dist_to[i].resize(N);
      for (size_t k = 0; k < N; ++k) dist_to[i][k] = center_distance(prods[i], centers[k]);
    }
    for (double eps : opt.eps_grid) {
      SearchPoint sp;
      sp.m = m;
      sp.eps = eps;
      const double delta = delta_of(eps);
      std::vector<std::vector<int>> members(N);
      for (int i = 0; i < opt.samples; ++i) {
        if (sig[i] > delta || dist_to[i].empty()) continue;
        for (size_t k = 0; k < N; ++k)
          if (dist_to[i][k] <= eps) members[k].push_back(i);
      }
      std::vector<size_t> kept;
      double lo = 1;
      for (size_t k = 0; k < N; ++k) {
        double mass = static_cast<double>(members[k].size()) / opt.samples;
        if (mass >= opt.alpha_min) {
          kept.push_back(k);
          lo = std::min(lo, mass);
        }
      }
      sp.retained = static_cast<int>(kept.size());
      sp.min_mass = kept.empty() ? 0.0 : lo;
      if (sp.retained < need) {
        sp.reason = "too few clusters";
        log.push_back(sp);
        continue;
      }
      std::vector<std::vector<Mat>> pool;
      std::vector<Mat> kc;
      for (size_t k : kept) {
        pool.emplace_back();
        for (size_t t = 0; t < members[k].size() && static_cast<int>(t) < opt.search_cap; ++t)
          pool.back().push_back(prods[members[k][t]]);
        kc.push_back(centers[k]);
      }
      Adversaries adv = adversaries_for(dist.dim, kc, opt.search_random, opt.search_angles,
                                        derive_seed(seed, 2));
      SchottkyReport rep = verify_measure(MatrixSemigroup{dist.dim, eps},
                                          pooled(pool, opt.search_cap, opt.rho), adv.left,
                                          adv.right, opt.rho, true);
      sp.worst = rep.worst();
      if (!rep.passed) {
        sp.reason = "misalignment above rho";
        log.push_back(sp);
        if (best.m == 0 || sp.worst < best.worst) best = sp;
        continue;
      }
      sp.accepted = true;
      sp.reason = "accepted";
      log.push_back(sp);
      SchottkyModel model;
      model.dist = dist;
      model.m = m;
      model.eps = eps;
      model.rho = opt.rho;
      model.delta = delta;
      model.radius = eps;
      model.horizon = atlas.horizon;
      model.seed = seed;
      model.centers = kc;
      for (size_t k : kept) {
        model.masses.push_back(static_cast<double>(members[k].size()) / opt.samples);
        model.pool.emplace_back();
        for (size_t t = 0; t < members[k].size() && static_cast<int>(t) < opt.pool_cap; ++t)
          model.pool.back().push_back(prods[members[k][t]]);
      }
      model.alpha = lo / 2;
      model.log = std::move(log);
      model.validate();
      return model;
    }
  }
  std::string msg = "no Schottky decomposition found up to m = " + std::to_string(opt.m_max);
  if (best.m > 0)
    msg += "; best worst-case misalignment " + std::to_string(best.worst) + " at m = " +
           std::to_string(best.m) + ", eps = " + std::to_string(best.eps);
  else
    msg += "; never enough contracting clusters";
  throw ConstructionError(msg);
}

BlockSource<Mat> interleaved_source(const SchottkyModel& model, uint64_t seed) {
  model.validate();
  auto mp = std::make_shared<const SchottkyModel>(model);
  BlockSource<Mat> src;
  src.m = model.m;
  src.alpha = model.alpha;
  src.name = "matrix/" + model.dist.name;
  src.block = [mp, seed](uint64_t n) {
    Stream r(seed, tag::kLetters, n);
    TaggedBlock<Mat> b;
    Mat g = sample_word(mp->dist, mp->m, r, &b.letters);
    double p = mp->alpha * mp->density(g);
    if (p > 1 + 1e-12) throw InternalError("thinning probability above 1");
    b.schottky = r.uniform() < p;
    if (b.schottky && sigma(g) > mp->delta) throw InternalError("Schottky block fails the sigma cap");
    return b;
  };
  return src;
}

namespace {

nlohmann::json mats(const std::vector<Mat>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (const Mat& g : v) a.push_back(g.entries());
  return a;
}

std::vector<Mat> mats_from(const nlohmann::json& a, int d) {
  std::vector<Mat> out;
  for (const auto& e : a) {
    auto v = e.get<std::vector<double>>();
    if (static_cast<int>(v.size()) != d * d) throw InputError("matrix of the wrong size");
    out.emplace_back(d, d, v);
  }
  return out;
}

}  // namespace

std::string model_to_json(const SchottkyModel& model, bool include_pool) {
  nlohmann::json j;
  j["distribution"] = nlohmann::json::parse(spec_to_json(model.dist));
  j["m"] = model.m;
  j["eps"] = model.eps;
  j["rho"] = model.rho;
  j["alpha"] = model.alpha;
  j["delta"] = model.delta;
  j["radius"] = model.radius;
  j["horizon"] = model.horizon;
  j["seed"] = model.seed;
  j["centers"] = mats(model.centers);
  j["masses"] = model.masses;
  if (include_pool) {
    nlohmann::json p = nlohmann::json::array();
    for (const auto& c : model.pool) p.push_back(mats(c));
    j["pool"] = p;
  }
  nlohmann::json lg = nlohmann::json::array();
  for (const SearchPoint& s : model.log)
    lg.push_back({{"m", s.m}, {"eps", s.eps}, {"retained", s.retained},
                  {"min_mass", s.min_mass}, {"worst", s.worst}, {"accepted", s.accepted},
                  {"reason", s.reason}});
  j["search"] = lg;
  return j.dump();
}

SchottkyModel model_from_json(const std::string& text) {
  SchottkyModel m;
  try {
    auto j = nlohmann::json::parse(text);
    m.dist = spec_from_json(j.at("distribution").dump());
    m.m = j.at("m").get<int>();
    m.eps = j.at("eps").get<double>();
    m.rho = j.at("rho").get<double>();
    m.alpha = j.at("alpha").get<double>();
    m.delta = j.value("delta", delta_of(m.eps));
    m.radius = j.value("radius", m.eps);
    m.horizon = j.value("horizon", 0);
    m.seed = j.value("seed", uint64_t{0});
    int d = m.dist.dim;
    m.centers = mats_from(j.at("centers"), d);
    m.masses = j.at("masses").get<std::vector<double>>();
    if (!j.contains("pool")) throw InputError("model JSON has no member pool");
    for (const auto& c : j.at("pool")) m.pool.push_back(mats_from(c, d));
    if (j.contains("search"))
      for (const auto& s : j.at("search"))
        m.log.push_back({s.at("m").get<int>(), s.at("eps").get<double>(),
                         s.at("retained").get<int>(), s.at("min_mass").get<double>(),
                         s.at("worst").get<double>(), s.at("accepted").get<bool>(),
                         s.at("reason").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad model JSON: ") + e.what());
  }
  m.validate();
  return m;
}

}  // namespace pivotal
