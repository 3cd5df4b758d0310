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


#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pivotal/diagnostics.hpp"
#include "pivotal/schottky.hpp"

using namespace pivotal;

namespace {

const SchottkyModel& clustered_model() {
  static const SchottkyModel m = [] {
    BuildOptions o;
    o.atlas.horizon = 1;
    return build_schottky(fix_clustered(), o, 7);
  }();
  return m;
}

const SchottkyModel& sl2_model() {
  static const SchottkyModel m = build_schottky(fix_sl2(), BuildOptions{}, 7);
  return m;
}

double angle_to(const std::vector<double>& u, double t) {
  return proj_dist(u, std::vector<double>{std::cos(t), std::sin(t)});
}

}  // namespace

TEST_CASE("boundary atlas of FIX-SL2") {
  AtlasOptions o;
  o.n_dirs = 4;
  BoundaryAtlas a = estimate_boundary(fix_sl2(), o, 3);
  REQUIRE(a.size() == 4);
  CHECK(a.separation >= o.separation_floor);
  for (double q : a.quality) CHECK(q < 1e-10);
  for (size_t i = 0; i < 4; ++i)
    for (size_t j = i + 1; j < 4; ++j)
      CHECK(std::min(proj_dist(a.u[i], a.u[j]), proj_dist(a.w[i], a.w[j])) >= a.separation - 1e-15);
  // Products of positive matrices: directions inside the positive cone.
  for (const auto& u : a.u) CHECK(u[0] * u[1] > 0);
}

TEST_CASE("boundary atlas of the ping-pong pair sits near the fixed points") {
  AtlasOptions o;
  o.n_dirs = 4;
  o.horizon = 30;
  BoundaryAtlas a = estimate_boundary(fix_pingpong(), o, 5);
  const double fixed[4] = {0, std::numbers::pi / 2, std::numbers::pi / 4, 3 * std::numbers::pi / 4};
  for (size_t k = 0; k < a.size(); ++k) {
    double best = 1;
    for (double t : fixed) best = std::min(best, angle_to(a.u[k], t));
    CHECK(best < 0.03);
    best = 1;
    for (double t : fixed) best = std::min(best, angle_to(a.w[k], t));
    CHECK(best < 0.03);
  }
}

TEST_CASE("atlas failures") {
  CHECK_THROWS_AS(estimate_boundary(fix_diagonal(), AtlasOptions{}, 1), ConstructionError);
  CHECK_THROWS_AS(estimate_boundary(fix_rotations(), AtlasOptions{}, 1), ConstructionError);
  CHECK_THROWS_AS(build_schottky(fix_rotations(), BuildOptions{}, 1), ConstructionError);
  BuildOptions bad;
  bad.rho = 0.25;
  CHECK_THROWS_AS(build_schottky(fix_sl2(), bad, 1), InputError);
}

TEST_CASE("helpers") {
  CHECK(delta_of(0.5) == doctest::Approx(std::pow(0.5, 6) / 48));
  Mat pi(2, 2, {1, 0, 0, 0});
  CHECK(center_distance(pi.scaled(-3), pi) == doctest::Approx(0.0));
  CHECK(center_distance(Mat(2, 2, {0, 0, 0, 1}), pi) == doctest::Approx(1.0));
  CHECK_THROWS_AS(center_distance(Mat(2, 2), pi), DomainError);
}

TEST_CASE("already contracting clusters are accepted at m = 1") {
  const SchottkyModel& m = clustered_model();
  CHECK(m.m == 1);
  CHECK(m.alpha > 0);
  CHECK(m.centers.size() >= 6);
  CHECK(m.log.back().accepted);
  for (size_t k = 0; k < m.pool.size(); ++k) {
    for (const Mat& g : m.pool[k]) {
      CHECK(sigma(g) <= m.delta);
      auto ks = m.clusters_of(g);
      CHECK(std::find(ks.begin(), ks.end(), static_cast<int>(k)) != ks.end());
      CHECK(m.alpha * m.density(g) <= 1.0);
    }
  }
  SchottkyReport rep = verify_schottky(m, default_adversaries(m, 200, 180, 4), m.rho);
  CHECK(rep.passed);
  CHECK(rep.worst() <= m.rho);
}

TEST_CASE("FIX-SL2 model passes empirical verification") {
  const SchottkyModel& m = sl2_model();
  MESSAGE("FIX-SL2 model: m = " << m.m << ", eps = " << m.eps << ", alpha = " << m.alpha
                                << ", clusters = " << m.centers.size());
  CHECK(m.m <= 40);
  CHECK(m.alpha > 0);
  SchottkyReport rep = verify_schottky(m, default_adversaries(m, 1000, 180, 9), m.rho);
  CHECK(rep.passed);
  CHECK(rep.failing_left.empty());
  CHECK(rep.failing_right.empty());
  // An adversary aligned with everything: the identity.
  auto nu = model_measure(m, 256);
  CHECK(nu.misalignment(m.semigroup(), Mat::identity(2), 0, 1).value == 0.0);
  CHECK(nu.misalignment(m.semigroup(), Mat::identity(2), 1, 1).value == 0.0);
}

TEST_CASE("free-group generators are 1/6-Schottky on short words") {
  auto nu = uniform_generators();
  auto words = all_reduced_words(3);
  std::erase_if(words, [](const FreeWord& w) { return w.empty(); });
  SchottkyReport rep = verify_measure(FreeGroupSemigroup{}, nu, words, words, 1.0 / 6);
  CHECK(rep.passed);
  CHECK(rep.worst() == doctest::Approx(1.0 / 6));
  SchottkyReport strict = verify_measure(FreeGroupSemigroup{}, nu, words, words, 0.1);
  CHECK_FALSE(strict.passed);
  SchottkyReport id = verify_measure(FreeGroupSemigroup{}, nu, {FreeWord()}, {FreeWord()}, 0.1);
  CHECK(id.worst() == 0.0);
}

TEST_CASE("interleaved stream: tags by thinning, letters untouched") {
  const SchottkyModel& m = clustered_model();
  BlockSource<Mat> src = interleaved_source(m, 17);
  const int n = 40000;
  double tags = 0, expect = 0, var = 0;
  std::vector<double> counts(fix_clustered().atoms.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    TaggedBlock<Mat> b = src.block(i);
    REQUIRE(b.letters.size() == 1);
    Mat g = normalized(b.letters[0]);
    double p = m.alpha * m.density(g);
    expect += p;
    var += p * (1 - p);
    if (b.schottky) {
      tags += 1;
      CHECK(!m.clusters_of(g).empty());
    }
    for (size_t a = 0; a < counts.size(); ++a)
      if (b.letters[0] == fix_clustered().atoms[a]) counts[a] += 1;
  }
  CHECK(std::abs(tags - expect) < 4 * std::sqrt(var));
  // Marginal letter law: uniform over the atoms.
  std::vector<double> probs(counts.size(), 1.0 / counts.size());
  CHECK(stats::chi_square_gof(counts, probs).p_value > 1e-3);
  // Same block index, same block.
  CHECK(src.block(5).letters == src.block(5).letters);
}

TEST_CASE("interleaved FIX-SL2 letters keep their law") {
  const SchottkyModel& m = sl2_model();
  BlockSource<Mat> src = interleaved_source(m, 2);
  std::vector<double> a(2, 0.0), b(2, 0.0);
  DistributionSpec d = fix_sl2();
  Stream direct(3, tag::kSuite, 0);
  for (int i = 0; i < 1000; ++i) {
    TaggedBlock<Mat> t = src.block(i);
    for (const Mat& x : t.letters) {
      a[x == d.atoms[0] ? 0 : 1] += 1;
      b[d.sample(direct) == d.atoms[0] ? 0 : 1] += 1;
    }
  }
  CHECK(stats::chi_square_homogeneity(a, b).p_value > 1e-3);
}

TEST_CASE("model JSON round trip") {
  const SchottkyModel& m = clustered_model();
  SchottkyModel back = model_from_json(model_to_json(m));
  CHECK(back.m == m.m);
  CHECK(back.eps == m.eps);
  CHECK(back.alpha == m.alpha);
  CHECK(back.centers == m.centers);
  CHECK(back.pool.size() == m.pool.size());
  CHECK(back.pool[0] == m.pool[0]);
  CHECK(back.log.size() == m.log.size());
  CHECK(model_to_json(back) == model_to_json(m));
  CHECK_THROWS_AS(model_from_json("{}"), InputError);
  CHECK_THROWS_AS(model_from_json(model_to_json(m, false)), InputError);
}

TEST_CASE("matrix pivot run: diagnostics (e)-(h) on FIX-SL2") {
  const SchottkyModel& m = sl2_model();
  auto nu = model_measure(m, 64);
  RunOptions ro;
  ro.steps = 200;
  ro.keep_blocks = true;
  ro.settle_margin = 16;
  auto res = run_pivot(m.semigroup(), interleaved_source(m, 3), nu, 3, ro);
  REQUIRE(res.run.settled > 5);
  CHECK(check_renewal(res.run.m_trace, res.run.pivot_steps));
  MatrixDiagnostics d = matrix_diagnostics(m, nu, res.run, res.hats, 200, 1);
  CHECK(d.ok());
  CHECK(d.heredity_checked > 100);
  CHECK(d.sigma_checked == res.run.settled);
  CHECK(d.sigma_max <= m.delta);
  CHECK(d.recursive.pivots == res.run.settled);
  for (const VEvent& e : res.run.v_events) CHECK(e.certified);
  // Odd hat-v blocks are Schottky: sigma below the cap.
  for (size_t i = 1; i < res.hats.size(); i += 2) CHECK(sigma(res.hats[i].product) <= m.delta);

  PBlocks<MatrixSemigroup> pb(m.semigroup(), res.run, res.hats);
  uint64_t n = pb.start(2 * res.run.settled) - 1;
  LeftRight lr = left_right_pivots(m, nu, res.run, res.hats, Mat::row({1, -0.5}),
                                   Mat::column({0.2, 1}), n, 4);
  CHECK(lr.l_f >= 0);
  CHECK(lr.l_certified);
  CHECK(lr.q_n > 0);
  CHECK((lr.r_escape || lr.r_certified));
  CHECK((lr.c_escape || lr.c_certified));
  CHECK_THROWS_AS(left_right_pivots(m, nu, res.run, res.hats, Mat(1, 2), Mat::column({0, 1}), n, 4),
                  DomainError);
  CHECK_THROWS_AS(left_right_pivots(m, nu, res.run, res.hats, Mat::row({1, 0}),
                                    Mat::column({0, 1}), res.hats.size() + 1, 4),
                  InputError);
}

TEST_CASE("left and right pivot laws over independent runs") {
  const SchottkyModel& m = clustered_model();
  auto nu = model_measure(m, 6);
  std::vector<uint64_t> l, r, c;
  int undecided = 0;
  for (uint64_t run = 0; run < 1000; ++run) {
    uint64_t seed = derive_seed(1234, run);
    RunOptions ro;
    ro.steps = 100000;
    ro.stop_at_m = 24;
    ro.keep_blocks = true;
    ro.keep_events = false;
    ro.settle_margin = 10;
    auto res = run_pivot(m.semigroup(), interleaved_source(m, seed), nu, seed, ro);
    if (res.run.settled < 2) {
      ++undecided;
      continue;
    }
    PBlocks<MatrixSemigroup> pb(m.semigroup(), res.run, res.hats);
    uint64_t n = pb.start(2 * res.run.settled) - 1;
    LeftRight x = left_right_pivots(m, nu, res.run, res.hats, Mat::row({0.3, 1}),
                                    Mat::column({1, 0.1}), n, seed);
    CHECK(x.low_conditionals == 0);
    if (x.l_f < 0) {
      ++undecided;
      continue;
    }
    CHECK(x.l_certified);
    l.push_back(x.l_f);
    r.push_back(x.r_n);
    c.push_back(x.c_n);
  }
  CHECK(undecided == 0);
  CHECK(geometric_test(l, 0.25).p_value > 1e-3);
  CHECK(geometric_test(r, 0.25).p_value > 1e-3);
  CHECK(geometric_test(c, 0.5).p_value > 1e-3);
}
