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
#include <map>

#include "doctest.h"
#include "pivotal/fixtures.hpp"
#include "pivotal/pivot.hpp"

using namespace pivotal;

namespace {

FreeWord W(const char* s) { return FreeWord::parse(s); }

// Everything aligned; elements count letters.
struct Flat {
  using Element = long;
  static constexpr const char* kName = "flat";
  long identity() const { return 0; }
  long multiply(long a, long b) const { return a + b; }
  bool aligned(long, long) const { return true; }
};

BlockSource<long> flat_source(double alpha, uint64_t seed) {
  BlockSource<long> s;
  s.alpha = alpha;
  s.name = "flat";
  s.block = [alpha, seed](uint64_t n) {
    TaggedBlock<long> b;
    b.schottky = keyed_uniform(seed, tag::kLetters, n) < alpha;
    b.letters = {1};
    return b;
  };
  return s;
}

PivotResult<FreeGroupSemigroup> free_run(uint64_t seed, uint64_t steps,
                                         KappaKind k = KappaKind::Letters,
                                         bool keep = false) {
  static const auto nu = uniform_generators();
  RunOptions opt;
  opt.steps = steps;
  opt.keep_blocks = keep;
  opt.keep_letters = keep;
  return run_pivot(FreeGroupSemigroup{}, free_group_source(0.5, k, seed), nu, seed, opt);
}

}  // namespace

TEST_CASE("walkthrough: four narrated steps") {
  auto nu = uniform_generators();
  PivotEngine<FreeGroupSemigroup> eng(FreeGroupSemigroup{}, nu,
                                      [](uint64_t) { return 0.5; });
  eng.start(W("a^9"));
  CHECK(eng.p_state() == std::vector<uint64_t>{1, 1});

  StepEvent e1 = eng.step(W("a"), W("aba"));
  CHECK(e1.branch == Branch::Forward);
  CHECK(e1.mass == doctest::Approx(5.0 / 6));
  CHECK(e1.threshold == doctest::Approx(0.8));
  CHECK(eng.m() == 1);
  CHECK(eng.p_state() == std::vector<uint64_t>{1, 1, 1, 1});

  StepEvent e2 = eng.step(W("c"), W("b^-5"));
  CHECK(e2.branch == Branch::Forward);
  CHECK(e2.mass == doctest::Approx(4.0 / 6));
  CHECK(e2.threshold == doctest::Approx(1.0));
  CHECK(eng.m() == 2);
  CHECK(eng.p_state() == std::vector<uint64_t>{1, 1, 1, 1, 1, 1});

  StepEvent e3 = eng.step(W("B"), W("b^269"));
  CHECK_FALSE(e3.aligned);
  CHECK(e3.branch == Branch::Backtrack);
  CHECK(e3.examined == 1);
  CHECK(e3.back_mass == doctest::Approx(3.0 / 6));
  CHECK(e3.back_threshold == doctest::Approx(1.0));
  CHECK(eng.m() == 1);
  CHECK(eng.head() == W("abacb^263"));
  CHECK(eng.p_state() == std::vector<uint64_t>{1, 1, 5, 1});
  // pbar_5 = 9: the head ends before gamma_7.
  CHECK(2 * eng.j() + 1 == 7);

  StepEvent e4 = eng.step(W("C"), W("a"));
  CHECK(e4.branch == Branch::Forward);
  CHECK(e4.mass == doctest::Approx(4.0 / 6));
  CHECK(eng.m() == 2);
  CHECK(eng.p_state() == std::vector<uint64_t>{1, 1, 5, 1, 1, 1});
  CHECK(eng.m_trace() == std::vector<int32_t>{0, 1, 2, 1, 2});
  CHECK(eng.pivots()[0].even == W("a^9"));
  CHECK(eng.pivots()[1].even == W("abacb^263"));
  CHECK(check_renewal(eng.m_trace(), {0, 3}));
}

TEST_CASE("walkthrough: tau_0 above 4/5 refuses the first pivot") {
  auto nu = uniform_generators();
  PivotEngine<FreeGroupSemigroup> eng(FreeGroupSemigroup{}, nu,
                                      [](uint64_t) { return 0.85; });
  eng.start(W("a^9"));
  StepEvent e = eng.step(W("a"), W("aba"));
  CHECK(e.aligned);
  CHECK(e.branch == Branch::Reset);
  CHECK(eng.m() == 0);
  CHECK(eng.head() == W("a^11ba"));
}

TEST_CASE("pure forward when everything passes") {
  auto nu = SchottkyMeasure<long>::finite({1}, {1.0}, 1.0 / 6);
  PivotEngine<Flat> eng(Flat{}, nu, [](uint64_t) { return 0.0; });
  eng.start(3);
  for (int j = 0; j < 50; ++j) {
    StepEvent e = eng.step(1, 2);
    CHECK(e.branch == Branch::Forward);
    CHECK(e.threshold == doctest::Approx(2.0 / 3));
  }
  for (int j = 0; j <= 50; ++j) CHECK(eng.m_trace()[j] == j);
  auto p = eng.p_state();
  CHECK(p.size() == 102);
  for (uint64_t x : p) CHECK(x == 1);
}

TEST_CASE("flat model: v-groups are first successes of the penalties") {
  const uint64_t seed = 77;
  auto nu = SchottkyMeasure<long>::finite({1}, {1.0}, 1.0 / 6);
  Extractor<Flat> ex(Flat{}, flat_source(0.3, seed), nu, seed);
  ex.hat(399);
  const auto& ev = ex.v_events();
  REQUIRE(ev.size() == 200);
  uint64_t pair = 0;
  for (const VEvent& e : ev) {
    uint64_t j = 0;
    while (keyed_uniform(seed, tag::kPenaltyV, pair + j) >= 2.0 / 3) ++j;
    CHECK(e.pair == pair);
    CHECK(e.j0 == j);
    CHECK(ex.v().weight(4 * (&e - ev.data())) == 2 * j + 1);
    pair += j + 2;
  }
  CHECK(ex.v().total() == ex.hat_v().total());
  CHECK(ex.hat_v().total() == ex.w().size());
}

TEST_CASE("w-layer: unknown runs alternate with single Schottky blocks") {
  auto nu = SchottkyMeasure<long>::finite({1}, {1.0}, 1.0 / 6);
  const double alpha = 0.25;
  const uint64_t seed = 5;
  Extractor<Flat> ex(Flat{}, flat_source(alpha, seed), nu, seed);
  ex.hat(4000);
  const Extraction& w = ex.w();
  std::vector<uint64_t> runs;
  for (size_t k = 0; k < w.size(); ++k) {
    if (k % 2 == 1) CHECK(w.weight(k) == 1);
    else runs.push_back(w.weight(k));
    if (k % 2 == 1)
      CHECK(keyed_uniform(seed, tag::kLetters, w.start(k)) < alpha);
  }
  // Unknown runs: P(k) = (1 - alpha)^k alpha.
  CHECK(geometric_test(runs, 1 - alpha).p_value > 1e-3);
}

TEST_CASE("hat-v spans tile the letter stream and carry the products") {
  auto res = free_run(11, 400, KappaKind::Words, true);
  const auto& hats = res.hats;
  REQUIRE(hats.size() == 801);
  CHECK(hats[0].begin == 0);
  FreeGroupSemigroup fg;
  for (size_t i = 0; i < hats.size(); ++i) {
    if (i + 1 < hats.size()) CHECK(hats[i].end == hats[i + 1].begin);
    FreeWord p;
    for (uint64_t t = hats[i].begin; t < hats[i].end; ++t) p = fg.multiply(p, res.letters.at(t));
    CHECK(p == hats[i].product);
  }
  // Odd hat-v blocks are single Schottky letters.
  for (size_t i = 1; i < hats.size(); i += 2) {
    CHECK(hats[i].end - hats[i].begin == 1);
    CHECK(hats[i].product.length() == 1);
  }
  const PivotRun& r = res.run;
  for (size_t k = 0; k + 1 < r.hat_v.size(); k += 2) {
    CHECK(r.hat_v.weight(k) == r.v.weight(2 * k) + 2);
    CHECK(r.hat_v.weight(k + 1) == 1);
  }
  CHECK(r.w.total() <= r.n_letters);
}

TEST_CASE("renewal identity against the final pivots") {
  for (uint64_t seed : {1u, 2u, 3u, 4u}) {
    auto res = free_run(seed, 3000);
    const PivotRun& r = res.run;
    CHECK(check_renewal(r.m_trace, r.pivot_steps));
    // Independent recomputation of max{j : m_j <= k}.
    for (size_t k = 0; k < r.pivot_steps.size(); ++k) {
      uint64_t last = 0;
      for (size_t j = 0; j < r.m_trace.size(); ++j)
        if (r.m_trace[j] <= static_cast<int32_t>(k)) last = j;
      CHECK(r.pivot_steps[k] == last);
    }
  }
  CHECK_FALSE(check_renewal({0, 1, 2}, {0}));
  CHECK_FALSE(check_renewal({0, 1, 0}, {}) == false);
}

TEST_CASE("shift property: rerun after a surviving pivot") {
  auto nu = uniform_generators();
  auto res = free_run(21, 2000, KappaKind::Powers, true);
  const PivotRun& r = res.run;
  REQUIRE(r.pivot_steps.size() > 40);
  for (size_t k : {size_t(0), size_t(7), size_t(30)}) {
    uint64_t begin = 2 * r.pivot_steps[k] + 2;
    std::vector<int32_t> trace;
    auto steps = rerun_pivot_steps(FreeGroupSemigroup{}, nu, res.hats, begin, r.seed, &trace);
    REQUIRE(steps.size() == r.pivot_steps.size() - k - 1);
    for (size_t i = 0; i < steps.size(); ++i)
      CHECK(steps[i] + begin / 2 == r.pivot_steps[k + 1 + i]);
    for (size_t i = 0; i < trace.size(); ++i)
      CHECK(trace[i] + static_cast<int32_t>(k) + 1 == r.m_trace[begin / 2 + i]);
  }
  CHECK_THROWS_AS(rerun_pivot_steps(FreeGroupSemigroup{}, nu, res.hats, 3, r.seed), InputError);
}

TEST_CASE("settled p and pivot bookkeeping") {
  Extraction p = settled_p({0, 3, 4}, 3);
  CHECK(p.weights() == std::vector<uint64_t>{1, 1, 5, 1, 1, 1});
  CHECK(p.start(4) == 8);
  CHECK_THROWS_AS(settled_p({0}, 2), InputError);
}

TEST_CASE("backtrack depth law") {
  for (int64_t m = 1; m < 8; ++m) {
    auto law = backtrack_depth_law(1.0 / 6, m);
    REQUIRE(law.size() == static_cast<size_t>(m));
    double t = 0;
    for (double x : law) t += x;
    CHECK(t == doctest::Approx(1.0));
    // Depth d < m: 2 rho r^{d-1} (1 - r) / (2 rho) with r = 1/4.
    if (m > 1) CHECK(law[0] == doctest::Approx(0.75));
  }
  CHECK(backtrack_depth_law(1.0 / 6, 0).empty());
  CHECK(forward_probability(1.0 / 6) == doctest::Approx(2.0 / 3));
}

TEST_CASE("Markov law of m on a free-group run") {
  auto res = free_run(99, 20000);
  LawReport rep = diagnose_laws(res.run);
  double sd = std::sqrt(2.0 / 9 / rep.steps);
  CHECK(std::abs(rep.forward_rate - 2.0 / 3) < 4.5 * sd);
  CHECK(rep.depth_test.p_value > 1e-3);
  CHECK(rep.renewal_ok);
  CHECK(rep.m_unbounded);
  CHECK(rep.pivots_used > 1000);
  for (double a : rep.autocorrelation) CHECK(std::abs(a) < 0.1);
}

TEST_CASE("v-law is geometric with ratio 2 rho") {
  auto nu = uniform_generators();
  Extractor<FreeGroupSemigroup> ex(FreeGroupSemigroup{},
                                   free_group_source(0.5, KappaKind::Words, 8), nu, 8);
  ex.hat(2 * 20000);
  std::vector<uint64_t> j0;
  for (const VEvent& e : ex.v_events()) {
    j0.push_back(e.j0);
    CHECK(e.certified);
  }
  CHECK(geometric_test(j0, 1.0 / 3).p_value > 1e-3);
}

TEST_CASE("unknown-block law does not change the m-trace law") {
  auto a = free_run(31, 20000, KappaKind::Letters).run;
  auto b = free_run(32, 20000, KappaKind::Powers).run;
  auto counts = [](const PivotRun& r) {
    std::vector<double> c(8, 0.0);
    for (size_t j = 0; j + 1 < r.m_trace.size(); ++j) {
      if (r.m_trace[j] < 8) continue;  // the boundary at 0 truncates backtracks
      int64_t d = r.m_trace[j + 1] - r.m_trace[j];
      c[d == 1 ? 0 : std::min<int64_t>(1 - d, 7)] += 1;
    }
    return c;
  };
  CHECK(stats::chi_square_homogeneity(counts(a), counts(b)).p_value > 1e-3);
}

TEST_CASE("degenerate pure-forward report") {
  PivotRun r;
  r.rho = 1.0 / 6;
  for (int j = 0; j <= 30; ++j) r.m_trace.push_back(j);
  for (int j = 0; j < 30; ++j) r.pivot_steps.push_back(j);
  LawReport rep = diagnose_laws(r);
  CHECK(rep.forward_rate == 1.0);
  for (uint64_t c : rep.depth_counts) CHECK(c == 0);
  CHECK(rep.renewal_ok);
}

TEST_CASE("reports serialize") {
  auto res = free_run(4, 50);
  std::string js = run_to_json(res.run);
  CHECK(js.find("\"m_trace\"") != std::string::npos);
  CHECK(js.find("\"branch\"") != std::string::npos);
  std::string csv = m_trace_csv(res.run);
  CHECK(csv.rfind("j,m\n0,0\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 52);
  CHECK(run_to_json(res.run) == js);
}

TEST_CASE("bad inputs") {
  auto nu = uniform_generators();
  BlockSource<FreeWord> src;
  CHECK_THROWS_AS(Extractor<FreeGroupSemigroup>(FreeGroupSemigroup{}, src, nu, 1), InputError);
  CHECK_THROWS_AS(free_group_source(0.0, KappaKind::Letters, 1), InputError);
  CHECK_THROWS_AS(kappa_from_name("x"), InputError);
  CHECK_THROWS_AS(diagnose_laws(PivotRun{}, 1), InputError);
}

TEST_CASE("pbar_3 samples are settled, odd and thread independent") {
  auto a = free_group_pbar3(0.5, KappaKind::Letters, 300, 5, 1);
  auto b = free_group_pbar3(0.5, KappaKind::Letters, 300, 5, 4);
  CHECK(a == b);
  CHECK(a == free_group_pbar3(0.5, KappaKind::Letters, 300, 5, 1, 70, 60));
  for (uint64_t v : a) {
    CHECK(v >= 3);
    CHECK(v % 2 == 1);
  }
  CHECK_THROWS_AS(free_group_pbar3(0.5, KappaKind::Letters, 0, 5), InputError);
  CHECK_THROWS_AS(free_group_pbar3(0.5, KappaKind::Letters, 10, 5, 1, 10, 30), InputError);
}
