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


#include "pivotal/fixtures.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "pivotal/error.hpp"
#include "pivotal/parallel.hpp"
#include "pivotal/random_mat.hpp"

namespace pivotal {

const char* kappa_name(KappaKind k) {
  switch (k) {
    case KappaKind::Letters: return "letters";
    case KappaKind::Words: return "words";
    case KappaKind::Powers: return "powers";
  }
  return "?";
}

KappaKind kappa_from_name(const std::string& s) {
  if (s == "letters") return KappaKind::Letters;
  if (s == "words") return KappaKind::Words;
  if (s == "powers") return KappaKind::Powers;
  throw InputError("unknown kappa law '" + s + "'");
}

FreeWord random_generator(Stream& r) {
  static const int kGen[6] = {1, -1, 2, -2, 3, -3};
  return FreeWord::letter(kGen[r.below(6)]);
}

FreeWord sample_kappa(KappaKind k, Stream& r) {
  switch (k) {
    case KappaKind::Letters:
      return random_generator(r);
    case KappaKind::Words: {
      std::vector<int8_t> w;
      w.push_back(static_cast<int8_t>(random_generator(r).first()));
      while (r.uniform() < 0.5) {
        int l;
        do {
          l = random_generator(r).first();
        } while (l == -w.back());
        w.push_back(static_cast<int8_t>(l));
      }
      return FreeWord(w);
    }
    case KappaKind::Powers: {
      int g = random_generator(r).first();
      int n = 1 + static_cast<int>(r.below(50));
      return FreeWord(std::vector<int8_t>(n, static_cast<int8_t>(g)));
    }
  }
  throw InternalError("bad kappa kind");
}

BlockSource<FreeWord> free_group_source(double alpha, KappaKind kappa, uint64_t seed) {
  if (!(alpha > 0 && alpha < 1)) throw InputError("alpha must lie in (0, 1)");
  BlockSource<FreeWord> src;
  src.m = 1;
  src.alpha = alpha;
  src.name = std::string("free-group/") + kappa_name(kappa);
  src.block = [alpha, kappa, seed](uint64_t n) {
    Stream r(seed, tag::kLetters, n);
    TaggedBlock<FreeWord> b;
    b.schottky = r.uniform() < alpha;
    b.letters.push_back(b.schottky ? random_generator(r) : sample_kappa(kappa, r));
    return b;
  };
  return src;
}

std::vector<uint64_t> free_group_pbar3(double alpha, KappaKind kappa, long runs, uint64_t seed,
                                       int threads, int64_t stop_m, uint64_t margin) {
  if (runs < 1) throw InputError("need at least one run");
  if (stop_m < 2 || static_cast<uint64_t>(stop_m) < margin + 2)
    throw InputError("stop level must exceed the settle margin by 2");
  const auto nu = uniform_generators();
  std::vector<uint64_t> out(runs);
  parallel_for(runs, threads, [&](long i) {
    uint64_t s = derive_seed(seed, static_cast<uint64_t>(i));
    RunOptions opt;
    opt.steps = 1000000;
    opt.keep_events = false;
    opt.stop_at_m = stop_m;
    opt.settle_margin = margin;
    auto res = run_pivot(FreeGroupSemigroup{}, free_group_source(alpha, kappa, s), nu, s, opt);
    if (res.run.settled < 2) throw InternalError("second pivot did not settle");
    out[i] = 2 * res.run.pivot_steps[1] + 1;
  });
  return out;
}

// ---------------------------------------------------------------------------

double determinant(const Mat& g) {
  if (!g.is_square()) throw DomainError("determinant of a non-square matrix");
  int n = g.rows();
  Mat a = g;
  double det = 1;
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
    if (a(p, c) == 0) return 0;
    if (p != c) {
      for (int k = 0; k < n; ++k) std::swap(a(p, k), a(c, k));
      det = -det;
    }
    det *= a(c, c);
    for (int r = c + 1; r < n; ++r) {
      double f = a(r, c) / a(c, c);
      for (int k = c; k < n; ++k) a(r, k) -= f * a(c, k);
    }
  }
  return det;
}

namespace {

Mat haar_special(int d, Stream& r) {
  if (d == 2) return rotation2(2 * std::numbers::pi * r.uniform());
  Mat q = haar_orthogonal(d, r);
  if (determinant(q) < 0)
    for (int i = 0; i < d; ++i) q(i, 0) = -q(i, 0);
  return q;
}

const char* kind_name(DistKind k) {
  switch (k) {
    case DistKind::FiniteSupport: return "finite_support";
    case DistKind::RotationProjectionMix: return "rotation_projection_mix";
    case DistKind::HeavyTailPolar: return "heavy_tail_polar";
    case DistKind::RotationComposed: return "rotation_composed";
  }
  return "?";
}

Mat square_from(const std::vector<double>& v, int dim) {
  if (static_cast<int>(v.size()) != dim * dim)
    throw InputError("matrix entry count does not match dim");
  return Mat(dim, dim, v);
}

DistributionSpec finite(std::string name, std::vector<Mat> atoms) {
  DistributionSpec s;
  s.kind = DistKind::FiniteSupport;
  s.name = std::move(name);
  s.dim = atoms.front().rows();
  s.weights.assign(atoms.size(), 1.0 / atoms.size());
  s.atoms = std::move(atoms);
  return s;
}

}  // namespace

void DistributionSpec::validate() const {
  if (dim < 1) throw InputError("dim must be positive");
  switch (kind) {
    case DistKind::FiniteSupport: {
      if (atoms.empty() || atoms.size() != weights.size())
        throw InputError("finite support needs matching atoms and weights");
      double t = 0;
      for (size_t i = 0; i < atoms.size(); ++i) {
        if (atoms[i].rows() != dim || atoms[i].cols() != dim)
          throw InputError("atom of the wrong shape");
        if (!atoms[i].all_finite()) throw InputError("non-finite atom");
        if (!(weights[i] > 0)) throw InputError("weights must be positive");
        t += weights[i];
      }
      if (std::abs(t - 1) > 1e-9) throw InputError("weights must sum to 1");
      break;
    }
    case DistKind::RotationProjectionMix:
      if (!(mix >= 0 && mix <= 1)) throw InputError("mix must lie in [0, 1]");
      [[fallthrough]];
    case DistKind::RotationComposed:
      if (fixed.rows() != dim || fixed.cols() != dim || !fixed.all_finite())
        throw InputError("fixed matrix of the wrong shape");
      break;
    case DistKind::HeavyTailPolar:
      if (dim != 2) throw InputError("heavy_tail_polar is two-dimensional");
      if (!(pareto_shape > 0) || !std::isfinite(pareto_shape))
        throw InputError("pareto_shape must be positive");
      break;
  }
}

Mat DistributionSpec::sample(Stream& r, double* log_scale) const {
  switch (kind) {
    case DistKind::FiniteSupport: {
      double u = r.uniform(), c = 0;
      for (size_t i = 0; i < atoms.size(); ++i)
        if (u < (c += weights[i])) return atoms[i];
      return atoms.back();
    }
    case DistKind::RotationProjectionMix:
      if (r.uniform() < mix) return haar_special(dim, r);
      return fixed;
    case DistKind::RotationComposed:
      return fixed * haar_special(dim, r);
    case DistKind::HeavyTailPolar: {
      double x = std::pow(r.uniform_open(), -1.0 / pareto_shape);
      Mat k1 = haar_special(2, r);
      Mat k2 = haar_special(2, r);
      if (log_scale) *log_scale += x;
      return k1 * Mat::diag({1.0, std::exp(-2 * x)}) * k2;
    }
  }
  throw InternalError("bad distribution kind");
}

DistributionSpec::Draw DistributionSpec::draw(Stream& r) const {
  Draw d;
  d.g = sample(r, &d.log_scale);
  if (kind == DistKind::HeavyTailPolar) {
    d.log_abs_det = 0.0;
  } else {
    double det = determinant(d.g);
    d.log_abs_det = det == 0.0 ? -std::numeric_limits<double>::infinity()
                               : std::log(std::abs(det)) + dim * d.log_scale;
  }
  return d;
}

bool DistributionSpec::invertible() const {
  switch (kind) {
    case DistKind::FiniteSupport:
      for (const Mat& a : atoms)
        if (std::abs(determinant(normalized(a))) < 1e-300) return false;
      return true;
    case DistKind::RotationProjectionMix:
      return mix == 1 || std::abs(determinant(normalized(fixed))) > 1e-300;
    case DistKind::RotationComposed:
      return std::abs(determinant(normalized(fixed))) > 1e-300;
    case DistKind::HeavyTailPolar:
      return true;
  }
  return false;
}

DistributionSpec fix_sl2() {
  return finite("FIX-SL2", {Mat(2, 2, {2, 1, 1, 1}), Mat(2, 2, {1, 1, 1, 2})});
}

DistributionSpec fix_heavy(double shape) {
  DistributionSpec s;
  s.kind = DistKind::HeavyTailPolar;
  s.name = "FIX-HEAVY";
  s.pareto_shape = shape;
  return s;
}

DistributionSpec fix_rotproj() {
  DistributionSpec s;
  s.kind = DistKind::RotationProjectionMix;
  s.name = "FIX-ROTPROJ";
  s.mix = 0.5;
  s.fixed = Mat(2, 2, {1, 0, 0, 0});
  return s;
}

DistributionSpec fix_rankdrop() {
  Mat p(2, 2, {1, 0, 0, 0});
  Mat r90(2, 2, {0, -1, 1, 0});  // exact, so that P R P vanishes
  return finite("FIX-RANKDROP", {p, r90 * p});
}

DistributionSpec fix_rotations() {
  DistributionSpec s = fix_rotproj();
  s.name = "FIX-ROTATIONS";
  s.mix = 1.0;
  return s;
}

DistributionSpec fix_diagonal() {
  return finite("FIX-DIAGONAL", {Mat::diag({2.0, 1.0})});
}

DistributionSpec fix_pingpong(double l) {
  Mat a = Mat::diag({l, 1 / l});
  Mat ai = Mat::diag({1 / l, l});
  Mat r = rotation2(std::numbers::pi / 4);
  Mat rt = r.transpose();
  return finite("FIX-PINGPONG", {a, ai, r * a * rt, r * ai * rt});
}

DistributionSpec fix_clustered() {
  std::vector<Mat> atoms;
  for (int k = 0; k < 8; ++k) {
    double t = k * std::numbers::pi / 8;
    double s = t + std::numbers::pi / 16;
    Mat u = Mat::column({std::cos(t), std::sin(t)});
    Mat w = Mat::row({std::cos(s), std::sin(s)});
    atoms.push_back(u * w + Mat::identity(2).scaled(1e-9));
  }
  return finite("FIX-CLUSTERED", atoms);
}

DistributionSpec fix_rotation_composed() {
  DistributionSpec s;
  s.kind = DistKind::RotationComposed;
  s.name = "FIX-ROTCOMPOSED";
  s.fixed = Mat::diag({3.0, 1.0 / 3});
  return s;
}

std::vector<std::string> fixture_names() {
  return {"FIX-SL2",      "FIX-HEAVY",    "FIX-ROTPROJ",   "FIX-RANKDROP",
          "FIX-ROTATIONS", "FIX-DIAGONAL", "FIX-PINGPONG", "FIX-CLUSTERED",
          "FIX-ROTCOMPOSED"};
}

DistributionSpec fixture_by_name(const std::string& n) {
  if (n == "FIX-SL2") return fix_sl2();
  if (n == "FIX-HEAVY") return fix_heavy();
  if (n == "FIX-ROTPROJ") return fix_rotproj();
  if (n == "FIX-RANKDROP") return fix_rankdrop();
  if (n == "FIX-ROTATIONS") return fix_rotations();
  if (n == "FIX-DIAGONAL") return fix_diagonal();
  if (n == "FIX-PINGPONG") return fix_pingpong();
  if (n == "FIX-CLUSTERED") return fix_clustered();
  if (n == "FIX-ROTCOMPOSED") return fix_rotation_composed();
  throw InputError("unknown fixture '" + n + "'");
}

namespace {

DistributionSpec spec_from(const nlohmann::json& j, int depth) {
  if (depth > 4) throw InputError("custom_file nesting too deep");
  if (!j.is_object()) throw InputError("distribution JSON must be an object");
  if (j.contains("fixture")) {
    DistributionSpec s = fixture_by_name(j.at("fixture").get<std::string>());
    if (j.contains("pareto_shape")) s.pareto_shape = j.at("pareto_shape").get<double>();
    s.validate();
    return s;
  }
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "custom_file") {
    std::string path = j.at("path").get<std::string>();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open distribution file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json inner;
    try {
      inner = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("invalid JSON in '") + path + "': " + e.what());
    }
    return spec_from(inner, depth + 1);
  }
  DistributionSpec s;
  s.name = j.value("name", kind);
  s.dim = j.value("dim", 2);
  if (kind == "finite_support") {
    s.kind = DistKind::FiniteSupport;
    for (const auto& a : j.at("atoms")) s.atoms.push_back(square_from(a.get<std::vector<double>>(), s.dim));
    if (j.contains("weights")) {
      s.weights = j.at("weights").get<std::vector<double>>();
      double t = 0;
      for (double w : s.weights) t += w;
      if (!(t > 0)) throw InputError("weights must be positive");
      for (double& w : s.weights) w /= t;
    } else {
      s.weights.assign(s.atoms.size(), s.atoms.empty() ? 0.0 : 1.0 / s.atoms.size());
    }
  } else if (kind == "rotation_projection_mix") {
    s.kind = DistKind::RotationProjectionMix;
    s.mix = j.value("mix", 0.5);
    s.fixed = square_from(j.at("fixed").get<std::vector<double>>(), s.dim);
  } else if (kind == "heavy_tail_polar") {
    s.kind = DistKind::HeavyTailPolar;
    s.pareto_shape = j.value("pareto_shape", 1.0);
  } else if (kind == "rotation_composed") {
    s.kind = DistKind::RotationComposed;
    s.fixed = square_from(j.at("fixed").get<std::vector<double>>(), s.dim);
  } else {
    throw InputError("unknown distribution kind '" + kind + "'");
  }
  s.validate();
  return s;
}

}  // namespace

DistributionSpec spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid JSON: ") + e.what());
  }
  try {
    return spec_from(j, 0);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad distribution: ") + e.what());
  }
}

std::string spec_to_json(const DistributionSpec& s) {
  nlohmann::json j;
  j["kind"] = kind_name(s.kind);
  j["name"] = s.name;
  j["dim"] = s.dim;
  switch (s.kind) {
    case DistKind::FiniteSupport: {
      nlohmann::json atoms = nlohmann::json::array();
      for (const Mat& a : s.atoms) atoms.push_back(a.entries());
      j["atoms"] = atoms;
      j["weights"] = s.weights;
      break;
    }
    case DistKind::RotationProjectionMix:
      j["mix"] = s.mix;
      j["fixed"] = s.fixed.entries();
      break;
    case DistKind::RotationComposed:
      j["fixed"] = s.fixed.entries();
      break;
    case DistKind::HeavyTailPolar:
      j["pareto_shape"] = s.pareto_shape;
      break;
  }
  return j.dump();
}

}  // namespace pivotal
