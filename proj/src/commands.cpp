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

#include "pivotal/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "json.hpp"
#include "pivotal/alignment.hpp"
#include "pivotal/diagnostics.hpp"
#include "pivotal/error.hpp"
#include "pivotal/experiments.hpp"
#include "pivotal/fixtures.hpp"
#include "pivotal/pivot.hpp"
#include "pivotal/schottky.hpp"
#include "pivotal/semigroup.hpp"
#include "pivotal/stats.hpp"

namespace pivotal::cmd {

namespace {

using nlohmann::json;
using exp::Check;
using exp::Curve;
using exp::ExperimentReport;

json parse_config(const std::string& text) {
  if (text.empty()) return json::object();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("config must be a JSON object");
  static const std::set<std::string> keys = {"distribution", "seed", "trajectories", "steps",
                                             "threads", "bootstrap", "points", "params"};
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) throw InputError("unknown config key '" + k + "'");
  return j;
}

// Typed access with a readable error.
template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("config value '") + key + "' has the wrong type");
  }
}

void only_keys(const json& params, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : params.items()) {
    bool ok = std::any_of(allowed.begin(), allowed.end(),
                          [&](const char* a) { return k == a; });
    if (!ok) throw InputError("unknown parameter '" + k + "'");
  }
}

DistributionSpec distribution(const json& cfg, const char* fallback) {
  if (!cfg.contains("distribution")) return fixture_by_name(fallback);
  const json& d = cfg["distribution"];
  if (d.is_string()) return fixture_by_name(d.get<std::string>());
  return spec_from_json(d.dump());
}

struct Common {
  exp::ExperimentOptions opt;
  json params = json::object();
};

Common common(const Request& req, const json& cfg, long traj, long steps) {
  Common c;
  c.opt.seed = get<uint64_t>(cfg, "seed", 1);
  c.opt.trajectories = get<long>(cfg, "trajectories", traj);
  c.opt.steps = get<long>(cfg, "steps", steps);
  c.opt.threads = get<int>(cfg, "threads", 1);
  c.opt.bootstrap = get<int>(cfg, "bootstrap", 1000);
  c.opt.points = get<int>(cfg, "points", 100);
  if (req.seed) c.opt.seed = *req.seed;
  if (req.trajectories) c.opt.trajectories = *req.trajectories;
  if (req.steps) c.opt.steps = *req.steps;
  if (req.threads) c.opt.threads = *req.threads;
  if (c.opt.threads < 1) throw InputError("threads must be positive");
  if (cfg.contains("params")) {
    if (!cfg["params"].is_object()) throw InputError("params must be an object");
    c.params = cfg["params"];
  }
  return c;
}

Response finish(const ExperimentReport& r) {
  Response out;
  out.passed = r.passed();
  out.report = exp::report_json(r);
  for (const Curve& c : r.curves) out.curves.push_back({c.name + ".csv", exp::curve_csv(c)});
  long ok = std::count_if(r.checks.begin(), r.checks.end(), [](const Check& c) { return c.passed; });
  out.summary = r.experiment + ": " + (out.passed ? "PASS" : "FAIL") + " (" +
                std::to_string(ok) + "/" + std::to_string(r.checks.size()) + " checks)";
  out.wall_seconds = r.wall_seconds;
  return out;
}

// ---------------------------------------------------------------------------

Response do_lambda(const Request& req, const json& cfg) {
  Common c = common(req, cfg, 200, 2000);
  only_keys(c.params, {"alpha_fracs"});
  exp::LambdaParams p;
  p.alpha_fracs = get(c.params, "alpha_fracs", p.alpha_fracs);
  return finish(exp::run_lambda12(distribution(cfg, "FIX-SL2"), c.opt, p));
}

Response do_contraction(const Request& req, const json& cfg) {
  Common c = common(req, cfg, 200, 2000);
  only_keys(c.params, {"x", "y", "v", "tolerance", "exclusion_max", "pilot_samples"});
  exp::ContractionParams p;
  p.x = get(c.params, "x", p.x);
  p.y = get(c.params, "y", p.y);
  p.v = get(c.params, "v", p.v);
  p.tolerance = get(c.params, "tolerance", p.tolerance);
  p.exclusion_max = get(c.params, "exclusion_max", p.exclusion_max);
  p.pilot_samples = get(c.params, "pilot_samples", p.pilot_samples);
  if (p.pilot_samples < 1) throw InputError("pilot_samples must be positive");
  return finish(exp::run_contraction(distribution(cfg, "FIX-SL2"), c.opt, p));
}

Response do_coefficients(const Request& req, const json& cfg) {
  Common c = common(req, cfg, 100, 5000);
  only_keys(c.params, {"f", "v", "threshold", "stationarity"});
  exp::CoefficientParams p;
  p.f = get(c.params, "f", p.f);
  p.v = get(c.params, "v", p.v);
  p.threshold = get(c.params, "threshold", p.threshold);
  p.stationarity = get(c.params, "stationarity", p.stationarity);
  return finish(exp::run_coefficients(distribution(cfg, "FIX-SL2"), c.opt, p));
}

Response do_spectral(const Request& req, const json& cfg) {
  Common c = common(req, cfg, 200, 1000);
  only_keys(c.params, {"n_ref", "stationarity", "eigen_rate_frac"});
  exp::SpectralParams p;
  p.n_ref = get(c.params, "n_ref", p.n_ref);
  p.stationarity = get(c.params, "stationarity", p.stationarity);
  p.eigen_rate_frac = get(c.params, "eigen_rate_frac", p.eigen_rate_frac);
  return finish(exp::run_spectral(distribution(cfg, "FIX-SL2"), c.opt, p));
}

Response do_rank(const Request& req, const json& cfg) {
  Common c = common(req, cfg, 10000, 100);
  only_keys(c.params, {"probes", "n_check"});
  exp::RankParams p;
  p.probes = get(c.params, "probes", p.probes);
  p.n_check = get(c.params, "n_check", p.n_check);
  return finish(exp::run_rank_kernel(distribution(cfg, "FIX-ROTPROJ"), c.opt, p));
}

Response do_mixing(const Request& req, const json& cfg) {
  Common c = common(req, cfg, 200, 200);
  only_keys(c.params, {"initial", "include_constant"});
  exp::MixingParams p;
  p.initial = get(c.params, "initial", p.initial);
  p.include_constant = get(c.params, "include_constant", p.include_constant);
  return finish(exp::run_mixing(distribution(cfg, "FIX-SL2"), c.opt, p));
}

// ---------------------------------------------------------------------------

BuildOptions build_options(const json& p) {
  BuildOptions b;
  b.rho = get(p, "rho", b.rho);
  b.m_max = get(p, "m_max", b.m_max);
  b.eps_grid = get(p, "eps_grid", b.eps_grid);
  b.samples = get(p, "samples", b.samples);
  b.alpha_min = get(p, "alpha_min", b.alpha_min);
  b.pool_cap = get(p, "pool_cap", b.pool_cap);
  b.atlas.horizon = get(p, "horizon", b.atlas.horizon);
  b.atlas.n_dirs = get(p, "n_dirs", b.atlas.n_dirs);
  b.atlas.candidates = get(p, "candidates", b.atlas.candidates);
  return b;
}

Check check(const std::string& name, bool ok, double value, double thr, const std::string& d) {
  return Check{name, ok, value, thr, d};
}

void add_law_checks(ExperimentReport& r, const PivotRun& run, const LawReport& law) {
  double p = law.forward_expected;
  double se = law.steps ? std::sqrt(p * (1 - p) / law.steps) : NAN;
  double z = std::abs(law.forward_rate - p) / se;
  r.scalars.emplace_back("forward_rate", law.forward_rate);
  r.scalars.emplace_back("forward_expected", p);
  r.scalars.emplace_back("depth_p_value", law.depth_test.p_value);
  r.scalars.emplace_back("halves_ks_p_value", law.halves_ks.p_value);
  r.scalars.emplace_back("pivots_used", static_cast<double>(law.pivots_used));
  r.scalars.emplace_back("final_m", run.m_trace.empty() ? 0.0 : run.m_trace.back());
  r.checks.push_back(check("forward_rate", z <= 4, z, 4, "|z| of the forward frequency"));
  r.checks.push_back(check("depth_law", law.depth_test.p_value > 0.01, law.depth_test.p_value,
                           0.01, "chi-square p-value of backtrack depths"));
  r.checks.push_back(check("renewal_identity", law.renewal_ok, law.renewal_ok, 1,
                           "pivot positions from the m-trace"));
  if (law.pivots_used > 10) {
    double thr = std::max(0.02, 3 / std::sqrt(static_cast<double>(law.pivots_used)));
    double worst = 0;
    for (double a : law.autocorrelation) worst = std::max(worst, std::abs(a));
    r.checks.push_back(check("autocorrelation", worst <= thr, worst, thr,
                             "largest |lag 1..5 autocorrelation| of p_2k"));
    r.checks.push_back(check("halves_ks", law.halves_ks.p_value > 0.01, law.halves_ks.p_value,
                             0.01, "two-sample KS p-value, first vs second half"));
  }
  std::vector<uint64_t> j0;
  for (const VEvent& e : run.v_events) j0.push_back(e.j0);
  if (j0.size() > 50) {
    double pv = geometric_test(j0, 1.0 / 3).p_value;
    r.scalars.emplace_back("v_law_p_value", pv);
    r.checks.push_back(check("v_law", pv > 0.01, pv, 0.01, "geometric(1/3) chi-square p-value"));
  }
  Curve depth{"backtrack_depth", {}};
  uint64_t backs = 0;
  for (uint64_t c : law.depth_counts) backs += c;
  for (size_t i = 0; i < law.depth_counts.size(); ++i) {
    depth.rows.push_back({static_cast<long>(i + 1), "observed",
                          static_cast<double>(law.depth_counts[i]), NAN, NAN});
    if (i < law.depth_expected.size())
      depth.rows.push_back({static_cast<long>(i + 1), "expected",
                            law.depth_expected[i] * static_cast<double>(backs), NAN, NAN});
  }
  Curve ac{"autocorrelation", {}};
  for (size_t i = 0; i < law.autocorrelation.size(); ++i)
    ac.rows.push_back({static_cast<long>(i + 1), "p_2k", law.autocorrelation[i], NAN, NAN});
  r.curves = {depth, ac};
}

Response do_pivot(const Request& req, const json& cfg) {
  json p = cfg.contains("params") ? cfg["params"] : json::object();
  std::string model = get<std::string>(p, "model", "free-group");
  bool matrix = model == "matrix";
  if (!matrix && model != "free-group") throw InputError("model must be free-group or matrix");
  Common c = common(req, cfg, 1, matrix ? 300 : 100000);
  only_keys(c.params, {"model", "alpha", "kappa", "settle_margin", "rho", "m_max", "eps_grid",
                       "samples", "alpha_min", "pool_cap", "horizon", "n_dirs", "candidates",
                       "measure_cap", "diagnostic_samples", "pbar3_runs"});
  RunOptions ro;
  ro.steps = static_cast<uint64_t>(c.opt.steps);
  ro.keep_events = false;
  ro.settle_margin = get<uint64_t>(c.params, "settle_margin", matrix ? 16 : kSettleMargin);
  auto t0 = std::chrono::steady_clock::now();
  ExperimentReport r;
  r.experiment = "pivot-diagnostics";
  r.seed = c.opt.seed;
  r.n_traj = 1;
  r.n_steps = c.opt.steps;
  Response out;
  if (!matrix) {
    if (cfg.contains("distribution")) throw InputError("the free-group model takes no distribution");
    r.has_spec = false;
    double alpha = get(c.params, "alpha", 0.5);
    KappaKind kappa = kappa_from_name(get<std::string>(c.params, "kappa", "letters"));
    auto res = run_pivot(FreeGroupSemigroup{}, free_group_source(alpha, kappa, c.opt.seed),
                         uniform_generators(), c.opt.seed, ro);
    add_law_checks(r, res.run, diagnose_laws(res.run));
    r.scalars.emplace_back("alpha", alpha);
    long runs = get<long>(c.params, "pbar3_runs", 10000);
    if (runs > 0) {
      auto pbar3 = free_group_pbar3(alpha, kappa, runs, derive_seed(c.opt.seed, 3), c.opt.threads);
      stats::TailFit tf = stats::exponential_tail(pbar3, c.opt.bootstrap, derive_seed(c.opt.seed, 4));
      r.rates.push_back({"pbar3_tail", tf.rate, tf.ci.lo, tf.ci.hi, static_cast<long>(tf.t_lo),
                         static_cast<long>(tf.t_hi), tf.points});
      r.checks.push_back(check("pbar3_exponential_tail", std::isfinite(tf.ci.lo) && tf.ci.lo > 0,
                               tf.ci.lo, 0, "lower CI bound of the tail rate of pbar_3"));
      std::vector<uint64_t> sorted = pbar3;
      std::sort(sorted.begin(), sorted.end());
      Curve sv{"pbar3_survival", {}};
      for (size_t i = 0; i < sorted.size(); ++i) {
        if (i > 0 && sorted[i] == sorted[i - 1]) continue;
        sv.rows.push_back({static_cast<long>(sorted[i]), "P(pbar3>=t)",
                           static_cast<double>(sorted.size() - i) / static_cast<double>(runs),
                           NAN, NAN});
      }
      r.curves.push_back(sv);
    }
    out.extra.push_back({"m_trace.csv", m_trace_csv(res.run)});
  } else {
    r.spec = distribution(cfg, "FIX-SL2");
    SchottkyModel m = build_schottky(r.spec, build_options(c.params), c.opt.seed);
    auto nu = model_measure(m, get(c.params, "measure_cap", 64));
    ro.keep_blocks = true;
    auto res = run_pivot(m.semigroup(), interleaved_source(m, c.opt.seed), nu, c.opt.seed, ro);
    add_law_checks(r, res.run, diagnose_laws(res.run));
    MatrixDiagnostics d = matrix_diagnostics(m, nu, res.run, res.hats,
                                             get(c.params, "diagnostic_samples", 200), c.opt.seed);
    r.scalars.emplace_back("model_m", m.m);
    r.scalars.emplace_back("model_eps", m.eps);
    r.scalars.emplace_back("model_alpha", m.alpha);
    r.scalars.emplace_back("heredity_checked", static_cast<double>(d.heredity_checked));
    r.scalars.emplace_back("recursive_triples", static_cast<double>(d.recursive.triples));
    r.scalars.emplace_back("sigma_max", d.sigma_max);
    r.scalars.emplace_back("schottky_min", d.schottky_min);
    r.checks.push_back(check("heredity", d.heredity_violations == 0,
                             static_cast<double>(d.heredity_violations), 0, "violations"));
    r.checks.push_back(check("recursive_alignment", d.recursive.violations == 0,
                             static_cast<double>(d.recursive.violations), 0, "violations"));
    r.checks.push_back(check("pivot_sigma", d.sigma_violations == 0,
                             static_cast<double>(d.sigma_violations), 0, "violations"));
    r.checks.push_back(check("pivot_schottky", d.schottky_violations == 0,
                             static_cast<double>(d.schottky_violations), 0, "violations"));
    out.extra.push_back({"m_trace.csv", m_trace_csv(res.run)});
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Response f = finish(r);
  f.extra = std::move(out.extra);
  return f;
}

Response do_schottky(const Request& req, const json& cfg) {
  Common c = common(req, cfg, 1, 0);
  only_keys(c.params, {"rho", "m_max", "eps_grid", "samples", "alpha_min", "pool_cap", "horizon",
                       "n_dirs", "candidates", "adversaries_random", "adversaries_angles",
                       "budget"});
  auto t0 = std::chrono::steady_clock::now();
  ExperimentReport r;
  r.experiment = "schottky-build";
  r.spec = distribution(cfg, "FIX-SL2");
  r.seed = c.opt.seed;
  r.n_traj = 0;
  r.n_steps = 0;
  BuildOptions bo = build_options(c.params);
  SchottkyModel m = build_schottky(r.spec, bo, c.opt.seed);
  Adversaries adv = default_adversaries(m, get(c.params, "adversaries_random", 1000),
                                        get(c.params, "adversaries_angles", 180),
                                        derive_seed(c.opt.seed, 2));
  SchottkyReport v = verify_schottky(m, adv, m.rho, get(c.params, "budget", 1 << 14));
  r.scalars = {{"m", static_cast<double>(m.m)},
               {"eps", m.eps},
               {"alpha", m.alpha},
               {"delta", m.delta},
               {"radius", m.radius},
               {"clusters", static_cast<double>(m.centers.size())},
               {"min_mass", *std::min_element(m.masses.begin(), m.masses.end())},
               {"verify_worst", v.worst()},
               {"verify_checked", static_cast<double>(v.checked)}};
  r.checks.push_back(check("schottky_verified", v.passed, v.worst(), m.rho,
                           "largest misaligned mass over adversaries"));
  bool valid = true;
  try {
    m.validate();
  } catch (const Error&) {
    valid = false;
  }
  r.checks.push_back(check("model_valid", valid, m.alpha, 0, "alpha below every cluster mass"));
  Curve log{"search_log", {}};
  for (const SearchPoint& s : m.log) {
    char e[32];
    std::snprintf(e, sizeof e, "%g", s.eps);
    log.rows.push_back({s.m, std::string("worst@eps=") + e, s.worst, NAN, NAN});
    log.rows.push_back({s.m, std::string("retained@eps=") + e, static_cast<double>(s.retained),
                        NAN, NAN});
    log.rows.push_back({s.m, std::string("min_mass@eps=") + e, s.min_mass, NAN, NAN});
  }
  r.curves = {log};
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Response out = finish(r);
  out.extra.push_back({"model.json", model_to_json(m)});
  return out;
}

Response do_lemmas(const Request& req, const json& cfg) {
  if (cfg.contains("distribution")) throw InputError("lemma-suite takes no distribution");
  Common c = common(req, cfg, 100000, 0);
  only_keys(c.params, {"lemmas"});
  std::vector<align::Lemma> lemmas = align::all_lemmas();
  if (c.params.contains("lemmas")) {
    lemmas.clear();
    for (const std::string& id : get<std::vector<std::string>>(c.params, "lemmas", {}))
      lemmas.push_back(align::lemma_from_id(id));
  }
  if (c.opt.trajectories < 1) throw InputError("need at least one instance");
  auto t0 = std::chrono::steady_clock::now();
  ExperimentReport r;
  r.experiment = "lemma-suite";
  r.has_spec = false;
  r.seed = c.opt.seed;
  r.n_traj = c.opt.trajectories;
  r.n_steps = 0;
  Curve cv{"suite", {}};
  long idx = 0;
  for (align::Lemma l : lemmas) {
    align::SuiteResult s = align::run_suite(l, c.opt.trajectories, c.opt.seed, c.opt.threads);
    std::string id = align::lemma_id(l);
    r.checks.push_back(check(id, s.violations == 0, static_cast<double>(s.violations), 0,
                             "conclusion violations beyond slack"));
    r.scalars.emplace_back(id + ".rejected", static_cast<double>(s.rejected));
    r.scalars.emplace_back(id + ".worst_margin", s.worst_margin);
    cv.rows.push_back({idx, id + ".instances", static_cast<double>(s.instances), NAN, NAN});
    cv.rows.push_back({idx, id + ".violations", static_cast<double>(s.violations), NAN, NAN});
    cv.rows.push_back({idx, id + ".worst_margin", s.worst_margin, NAN, NAN});
    ++idx;
  }
  r.curves = {cv};
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return finish(r);
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = {
      "lambda12", "contraction", "coefficients", "spectral",    "rank",
      "mixing",   "pivot-diagnostics", "schottky-build", "lemma-suite"};
  return names;
}

Response run(const Request& req) {
  json cfg = parse_config(req.config);
  const std::string& c = req.command;
  if (c == "lambda12") return do_lambda(req, cfg);
  if (c == "contraction") return do_contraction(req, cfg);
  if (c == "coefficients") return do_coefficients(req, cfg);
  if (c == "spectral") return do_spectral(req, cfg);
  if (c == "rank") return do_rank(req, cfg);
  if (c == "mixing") return do_mixing(req, cfg);
  if (c == "pivot-diagnostics") return do_pivot(req, cfg);
  if (c == "schottky-build") return do_schottky(req, cfg);
  if (c == "lemma-suite") return do_lemmas(req, cfg);
  throw InputError("unknown command '" + c + "'");
}

}  // namespace pivotal::cmd
