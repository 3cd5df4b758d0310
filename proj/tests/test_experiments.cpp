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
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "oracle.hpp"
#include "pivotal/commands.hpp"
#include "pivotal/error.hpp"
#include "pivotal/experiments.hpp"
#include "pivotal/fixtures.hpp"
#include "pivotal/random_mat.hpp"
#include "pivotal/rng.hpp"

using namespace pivotal;
using namespace pivotal::exp;
using nlohmann::json;

namespace {

ExperimentOptions small(long traj, long steps, int threads = 1) {
  ExperimentOptions o;
  o.trajectories = traj;
  o.steps = steps;
  o.threads = threads;
  o.bootstrap = 50;
  o.points = 20;
  return o;
}

// Unscaled product of the raw draws together with the accumulated scale.
struct Plain {
  Mat g;
  double log_scale = 0;
};

std::vector<double> mul_vec(const Mat& g, const std::vector<double>& x) {
  std::vector<double> y(g.rows(), 0.0);
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j) y[i] += g(i, j) * x[j];
  return y;
}

double norm2(const std::vector<double>& x) {
  double s = 0;
  for (double c : x) s += c * c;
  return std::sqrt(s);
}

oracle::Dense gram(const oracle::Dense& a) {
  size_t n = a.size();
  oracle::Dense g(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      for (size_t k = 0; k < n; ++k) g[i][j] += a[k][i] * a[k][j];
  return g;
}

oracle::Dense dense(const Mat& m) {
  oracle::Dense a(m.rows(), std::vector<double>(m.cols()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) a[i][j] = m(i, j);
  return a;
}

// 2x2 minors of a 3x3 matrix, rows/cols indexed by pairs (0,1),(0,2),(1,2).
oracle::Dense minors3(const Mat& g) {
  const int p[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  oracle::Dense w(3, std::vector<double>(3));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      w[a][b] = g(p[a][0], p[b][0]) * g(p[a][1], p[b][1]) -
                g(p[a][0], p[b][1]) * g(p[a][1], p[b][0]);
  return w;
}

double top_sv(const oracle::Dense& a) { return std::sqrt(oracle::sym_eigenvalues(gram(a))[0]); }

DistributionSpec random_finite(int d, int atoms, uint64_t seed) {
  Stream r(seed, tag::kDiagnostics, 77);
  DistributionSpec s;
  s.kind = DistKind::FiniteSupport;
  s.name = "random";
  s.dim = d;
  for (int k = 0; k < atoms; ++k) {
    Mat m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = r.normal();
    s.atoms.push_back(m);
    s.weights.push_back(1.0 / atoms);
  }
  s.validate();
  return s;
}

bool same_outputs(const ExperimentReport& a, const ExperimentReport& b) {
  if (report_json(a) != report_json(b)) return false;
  if (a.curves.size() != b.curves.size()) return false;
  for (size_t i = 0; i < a.curves.size(); ++i)
    if (curve_csv(a.curves[i]) != curve_csv(b.curves[i])) return false;
  return true;
}

// Closed-form zero law for uniform {P, R P}, P = e1 e1^T: every atom is
// c e1^T with c in {e1, e2}, and the product dies as soon as some factor
// after the first has c = e2. Three states: identity, alive, dead.
std::vector<double> rankdrop_zero_law(long n_max) {
  std::vector<double> out;
  double id = 1, alive = 0, dead = 0;
  for (long n = 0; n <= n_max; ++n) {
    out.push_back(dead);
    double nid = 0, nalive = id + 0.5 * alive, ndead = dead + 0.5 * alive;
    id = nid;
    alive = nalive;
    dead = ndead;
  }
  return out;
}

}  // namespace

TEST_SUITE("walk") {
  TEST_CASE("walk matches exact integer products of the SL2 fixture up to n = 30") {
    DistributionSpec s = fix_sl2();
    for (uint64_t t = 0; t < 20; ++t) {
      Stream r(3, tag::kTrajectory, t);
      Walk w(2);
      Mat g = Mat::identity(2);
      for (int n = 1; n <= 30; ++n) {
        auto d = s.draw(r);
        w.step(d);
        g = g * d.g;
        CHECK(w.n() == n);
        std::vector<double> gx = mul_vec(g, {1, 0}), gy = mul_vec(g, {0, 1});
        double nrm = top_sv(dense(g));
        CHECK(w.log_norm() == doctest::Approx(std::log(nrm)).epsilon(1e-13));
        // det = 1: log(s1 s2) = 0 and sigma = 1 / ||g||^2.
        CHECK(std::abs(w.log_wedge()) < 1e-12);
        CHECK(w.log_sigma() == doctest::Approx(-2 * std::log(nrm)).epsilon(1e-12));
        double dist = 1.0 / (norm2(gx) * norm2(gy));
        CHECK(w.log_image_dist({1, 0}, {0, 1}) == doctest::Approx(std::log(dist)).epsilon(1e-12));
        CHECK(w.log_image({1, 0}) == doctest::Approx(std::log(norm2(gx))).epsilon(1e-13));
        CHECK(w.image_orientation({1, 0}, {0, 1}) == 1);
        CHECK(w.rank() == 2);
        CHECK_FALSE(w.zero());
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) CHECK(w.unit()(i, j) == doctest::Approx(g(i, j) / nrm));
      }
    }
  }

  TEST_CASE("walk in dimension 3 tracks the second exterior power") {
    DistributionSpec s = random_finite(3, 4, 11);
    for (uint64_t t = 0; t < 10; ++t) {
      Stream r(5, tag::kTrajectory, t);
      Walk w(3);
      Mat g = Mat::identity(3);
      for (int n = 1; n <= 12; ++n) {
        auto d = s.draw(r);
        w.step(d);
        g = g * d.g;
        double s1 = top_sv(dense(g));
        double s1s2 = top_sv(minors3(g));
        CHECK(w.log_norm() == doctest::Approx(std::log(s1)).epsilon(1e-11));
        CHECK(w.log_wedge() == doctest::Approx(std::log(s1s2)).epsilon(1e-9));
        CHECK(w.log_sigma() <= 0.0);
        std::vector<double> x = {1, 2, -1}, y = {0, 1, 3};
        std::vector<double> gx = mul_vec(g, x), gy = mul_vec(g, y);
        double cross = norm2({gx[1] * gy[2] - gx[2] * gy[1], gx[2] * gy[0] - gx[0] * gy[2],
                              gx[0] * gy[1] - gx[1] * gy[0]});
        double dist = cross / (norm2(gx) * norm2(gy));
        CHECK(std::exp(w.log_image_dist(x, y)) == doctest::Approx(dist).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("walk of heavy-tailed draws agrees with the rescaled product") {
    DistributionSpec s = fix_heavy(3.0);
    Stream r(9, tag::kTrajectory, 0);
    Walk w(2);
    Mat g = Mat::identity(2);
    double log_scale = 0;
    for (int n = 1; n <= 8; ++n) {
      auto d = s.draw(r);
      w.step(d);
      g = g * d.g;
      log_scale += d.log_scale;
      CHECK(w.log_norm() == doctest::Approx(std::log(top_sv(dense(g))) + log_scale).epsilon(1e-10));
      CHECK(std::abs(w.log_wedge()) < 1e-9);
    }
  }

  TEST_CASE("draw consumes the stream exactly like sample") {
    for (const std::string& name : fixture_names()) {
      DistributionSpec s = fixture_by_name(name);
      Stream a(1, tag::kTrajectory, 4), b(1, tag::kTrajectory, 4);
      for (int k = 0; k < 20; ++k) {
        double ls = 0;
        Mat m = s.sample(a, &ls);
        auto d = s.draw(b);
        CHECK(m == d.g);
        CHECK(ls == d.log_scale);
      }
    }
  }

  TEST_CASE("rank and zero follow the explicit product for singular fixtures") {
    for (DistributionSpec s : {fix_rankdrop(), fix_rotproj()}) {
      for (uint64_t t = 0; t < 50; ++t) {
        Stream r(2, tag::kTrajectory, t);
        Walk w(2);
        Mat g = Mat::identity(2);
        for (int n = 1; n <= 15; ++n) {
          auto d = s.draw(r);
          w.step(d);
          g = g * d.g;
          auto sv = oracle::sym_eigenvalues(gram(dense(g)));
          int rank = 0;
          for (double e : sv) rank += e > 1e-300 && e > 1e-12 * sv[0];
          CHECK(w.rank() == rank);
          CHECK(w.zero() == (rank == 0));
        }
      }
    }
  }

  TEST_CASE("walk input errors") {
    CHECK_THROWS_AS(Walk(1), InputError);
    Walk w(2);
    DistributionSpec::Draw bad{Mat::identity(3), 0, 0};
    CHECK_THROWS_AS(w.step(bad), InputError);
    Walk w3(3);
    CHECK_THROWS_AS(w3.image_orientation({1, 0, 0}, {0, 1, 0}), InputError);
  }
}

TEST_SUITE("laws") {
  TEST_CASE("checkpoints are dense at the start then evenly spread") {
    auto c = checkpoints(2000, 100);
    CHECK(c.front() == 0);
    CHECK(c.back() == 2000);
    for (long n = 0; n <= 20; ++n) CHECK(c[n] == n);
    CHECK(std::is_sorted(c.begin(), c.end()));
    CHECK(std::set<long>(c.begin(), c.end()).size() == c.size());
    auto s = checkpoints(5, 100);
    CHECK(s == std::vector<long>{0, 1, 2, 3, 4, 5});
  }

  TEST_CASE("rank law of the rank-drop fixture matches the hand-built chain") {
    auto law = exact_rank_law(fix_rankdrop(), 25);
    REQUIRE(law);
    auto z = rankdrop_zero_law(25);
    for (long n = 0; n <= 25; ++n) {
      CHECK((*law)[n][0] == doctest::Approx(z[n]).epsilon(1e-14));
      double total = 0;
      for (double p : (*law)[n]) total += p;
      CHECK(total == doctest::Approx(1.0));
    }
    CHECK((*law)[0][2] == 1.0);
    CHECK((*law)[1][1] == 1.0);
  }

  TEST_CASE("rotation/projection mix keeps full rank with probability 2^-n") {
    auto law = exact_rank_law(fix_rotproj(), 30);
    REQUIRE(law);
    for (long n = 0; n <= 30; ++n) {
      CHECK((*law)[n][2] == doctest::Approx(std::ldexp(1.0, -static_cast<int>(n))));
      CHECK((*law)[n][0] == 0.0);
    }
  }

  TEST_CASE("invertible laws stay at full rank") {
    auto law = exact_rank_law(fix_sl2(), 10);
    REQUIRE(law);
    for (long n = 0; n <= 10; ++n) CHECK((*law)[n][2] == 1.0);
    auto heavy = exact_rank_law(fix_heavy(), 5);
    REQUIRE(heavy);
    CHECK((*heavy)[5][2] == 1.0);
  }

  TEST_CASE("state cap gives up on large finite supports") {
    DistributionSpec s = fix_sl2();
    s.atoms[1] = Mat::diag({1.0, 0.0});
    CHECK_FALSE(exact_rank_law(s, 40, 16).has_value());
  }
}

TEST_SUITE("experiments") {
  TEST_CASE("identical starting points never separate") {
    ContractionParams p;
    p.x = {0.6, 0.8};
    p.y = {0.6, 0.8};
    auto r = run_contraction(fix_sl2(), small(20, 100), p);
    CHECK(r.check("identical_points_zero").passed);
    CHECK(r.passed());
  }

  TEST_CASE("diagonal fixture has no coefficient or spectral gap") {
    auto c = run_coefficients(fix_diagonal(), small(5, 60));
    CHECK(c.scalar("median_gap_over_n") == 0.0);
    CHECK(c.passed());
    auto s = run_spectral(fix_diagonal(), small(5, 60));
    CHECK(s.scalar("median_rho_gap_final") == 0.0);
    CHECK(s.passed());
    auto l = run_lambda12(fix_diagonal(), small(5, 60));
    CHECK(l.scalar("lambda_hat") == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }

  TEST_CASE("rotations are flagged as non-proximal") {
    auto r = run_lambda12(fix_rotations(), small(10, 100));
    CHECK(r.scalar("non_proximal") == 1.0);
    CHECK(std::abs(r.scalar("lambda_hat")) < 1e-9);
    CHECK(r.check("sigma_bounded_below").passed);
  }

  TEST_CASE("invertible distributions never lose rank") {
    auto r = run_rank_kernel(fix_sl2(), small(50, 40));
    CHECK(r.scalar("mean_n_gamma") == 0.0);
    CHECK(r.scalar("eventual_rank") == 2.0);
    CHECK(r.passed());
  }

  TEST_CASE("rotation/projection stabilization follows 2^-n") {
    auto o = small(4000, 40);
    RankParams p;
    p.n_check = 10;
    auto r = run_rank_kernel(fix_rotproj(), o, p);
    CHECK(r.check("stabilization_vs_exact").passed);
    CHECK(r.check("terminal_rank_unanimous").passed);
    CHECK(r.scalar("mean_n_gamma") == doctest::Approx(2.0).epsilon(0.1));
  }

  TEST_CASE("rank-drop zero probability matches its exact law") {
    auto r = run_rank_kernel(fix_rankdrop(), small(4000, 30));
    CHECK(r.check("zero_vs_exact").passed);
    CHECK(r.scalar("eventual_rank") == 0.0);
  }

  TEST_CASE("constant test function has zero mixing gap") {
    auto r = run_mixing(fix_sl2(), small(40, 30));
    CHECK(r.check("constant_zero").passed);
  }

  TEST_CASE("lambda is positive for the SL2 fixture") {
    auto r = run_lambda12(fix_sl2(), small(40, 400));
    CHECK(r.scalar("lambda_hat") > 1.5);
    CHECK(r.scalar("lambda_hat") < 2.1);
    CHECK(r.check("lambda_positive").passed);
  }

  TEST_CASE("outputs are identical for 1, 4 and 8 threads") {
    struct Case {
      const char* name;
      std::function<ExperimentReport(int)> run;
    };
    std::vector<Case> cases = {
        {"lambda12", [](int th) { return run_lambda12(fix_sl2(), small(24, 150, th)); }},
        {"contraction", [](int th) { return run_contraction(fix_heavy(), small(24, 150, th)); }},
        {"coefficients", [](int th) { return run_coefficients(fix_sl2(), small(24, 150, th)); }},
        {"spectral", [](int th) { return run_spectral(fix_sl2(), small(24, 150, th)); }},
        {"rank", [](int th) { return run_rank_kernel(fix_rotproj(), small(200, 30, th)); }},
        {"mixing", [](int th) { return run_mixing(fix_sl2(), small(24, 40, th)); }},
    };
    for (const Case& c : cases) {
      CAPTURE(c.name);
      ExperimentReport one = c.run(1);
      CHECK(same_outputs(one, c.run(4)));
      CHECK(same_outputs(one, c.run(8)));
    }
  }

  TEST_CASE("different seeds give different trajectories") {
    auto o = small(10, 50);
    auto a = run_lambda12(fix_sl2(), o);
    o.seed = 2;
    auto b = run_lambda12(fix_sl2(), o);
    CHECK(a.scalar("lambda_hat") != b.scalar("lambda_hat"));
  }

  TEST_CASE("report serialization") {
    auto r = run_rank_kernel(fix_rotproj(), small(20, 10));
    json j = json::parse(report_json(r));
    for (const char* k : {"experiment", "spec", "seed", "n_traj", "n_steps", "passed", "checks",
                          "scalars", "rates", "excluded", "deferred", "curves"})
      CHECK(j.contains(k));
    CHECK_FALSE(j.contains("wall_seconds"));
    CHECK(json::parse(report_json(r, true)).contains("wall_seconds"));
    CHECK(j["spec"]["name"] == "FIX-ROTPROJ");
    std::string csv = curve_csv(r.curve("rank_law"));
    CHECK(csv.rfind("n,statistic,value,ci_lo,ci_hi\n", 0) == 0);
    ExperimentReport e;
    e.experiment = "x";
    e.scalars = {{"nan", NAN}, {"inf", INFINITY}, {"ninf", -INFINITY}, {"negzero", -0.0}};
    json k = json::parse(report_json(e));
    CHECK(k["scalars"]["nan"].is_null());
    CHECK(k["scalars"]["inf"] == "inf");
    CHECK(k["scalars"]["ninf"] == "-inf");
    CHECK(report_json(e).find("-0.0") == std::string::npos);
    CHECK_THROWS_AS(e.scalar("missing"), InputError);
    CHECK_THROWS_AS(e.curve("missing"), InputError);
  }

  TEST_CASE("experiment input errors") {
    CHECK_THROWS_AS(run_lambda12(fix_sl2(), small(0, 10)), InputError);
    CHECK_THROWS_AS(run_lambda12(fix_sl2(), small(10, 0)), InputError);
    LambdaParams lp;
    lp.alpha_fracs = {1.5};
    CHECK_THROWS_AS(run_lambda12(fix_sl2(), small(10, 10), lp), InputError);
    ContractionParams cp;
    cp.x = {1, 0, 0};
    CHECK_THROWS_AS(run_contraction(fix_sl2(), small(10, 10), cp), InputError);
    cp.x = {0, 0};
    CHECK_THROWS_AS(run_contraction(fix_sl2(), small(10, 10), cp), DomainError);
    SpectralParams sp;
    sp.n_ref = 50;
    CHECK_THROWS_AS(run_spectral(fix_sl2(), small(10, 10), sp), InputError);
  }
}

TEST_SUITE("commands") {
  cmd::Request req(const std::string& c, const std::string& config = "") {
    cmd::Request r;
    r.command = c;
    r.config = config;
    return r;
  }

  TEST_CASE("every command is listed once") {
    const auto& c = cmd::commands();
    CHECK(c.size() == 9);
    CHECK(std::set<std::string>(c.begin(), c.end()).size() == c.size());
  }

  TEST_CASE("config and flags") {
    auto r = req("rank", R"({"distribution": "FIX-RANKDROP", "trajectories": 500, "steps": 20,
                             "bootstrap": 20, "points": 5, "params": {"n_check": 15}})");
    r.seed = 7;
    cmd::Response out = cmd::run(r);
    json j = json::parse(out.report);
    CHECK(j["seed"] == 7);
    CHECK(j["n_traj"] == 500);
    CHECK(j["spec"]["name"] == "FIX-RANKDROP");
    CHECK(out.passed == j["passed"].get<bool>());
    CHECK_FALSE(out.curves.empty());
    for (const auto& a : out.curves) CHECK(a.name.size() > 4);
    r.trajectories = 100;
    CHECK(json::parse(cmd::run(r).report)["n_traj"] == 100);
  }

  TEST_CASE("inline distribution objects") {
    auto r = req("lambda12", R"({"distribution": {"kind": "finite_support", "dim": 2,
        "atoms": [[2, 0, 0, 0.5]], "weights": [1]}, "trajectories": 4, "steps": 30,
        "bootstrap": 10})");
    json j = json::parse(cmd::run(r).report);
    CHECK(j["scalars"]["lambda_hat"].get<double>() == doctest::Approx(std::log(4.0)));
  }

  TEST_CASE("bad requests are input errors") {
    CHECK_THROWS_AS(cmd::run(req("nope")), InputError);
    CHECK_THROWS_AS(cmd::run(req("rank", "{")), InputError);
    CHECK_THROWS_AS(cmd::run(req("rank", "[]")), InputError);
    CHECK_THROWS_AS(cmd::run(req("rank", R"({"sed": 1})")), InputError);
    CHECK_THROWS_AS(cmd::run(req("rank", R"({"seed": "one"})")), InputError);
    CHECK_THROWS_AS(cmd::run(req("rank", R"({"params": {"bogus": 1}})")), InputError);
    CHECK_THROWS_AS(cmd::run(req("rank", R"({"distribution": "FIX-NONE"})")), InputError);
    CHECK_THROWS_AS(cmd::run(req("lemma-suite", R"({"distribution": "FIX-SL2"})")), InputError);
    CHECK_THROWS_AS(cmd::run(req("pivot-diagnostics", R"({"params": {"model": "x"}})")),
                    InputError);
    auto r = req("rank");
    r.threads = 0;
    CHECK_THROWS_AS(cmd::run(r), InputError);
  }

  TEST_CASE("lemma suite and free-group diagnostics run through the dispatcher") {
    auto l = req("lemma-suite");
    l.trajectories = 200;
    cmd::Response lo = cmd::run(l);
    CHECK(lo.passed);
    CHECK(json::parse(lo.report)["spec"].is_null());
    auto p = req("pivot-diagnostics");
    p.steps = 20000;
    cmd::Response po = cmd::run(p);
    CHECK(po.passed);
    REQUIRE(po.extra.size() == 1);
    CHECK(po.extra[0].name == "m_trace.csv");
  }
}
