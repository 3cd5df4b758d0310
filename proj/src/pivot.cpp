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


#include "pivotal/pivot.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace pivotal {

const char* branch_name(Branch b) {
  switch (b) {
    case Branch::Forward: return "forward";
    case Branch::Backtrack: return "backtrack";
    case Branch::Reset: return "reset";
  }
  return "?";
}

Extraction settled_p(const std::vector<uint64_t>& pivot_steps, uint64_t settled) {
  if (settled > pivot_steps.size()) throw InputError("more settled pivots than pivots");
  Extraction p;
  uint64_t start = 0;
  for (uint64_t k = 0; k < settled; ++k) {
    p.push(2 * pivot_steps[k] + 1 - start);
    p.push(1);
    start = 2 * pivot_steps[k] + 2;
  }
  return p;
}

double forward_probability(double rho) { return 1 - 2 * rho; }

std::vector<double> backtrack_depth_law(double rho, int64_t m) {
  std::vector<double> out;
  if (m < 1) return out;
  const double r = rho / (1 - 2 * rho);
  double tail = 1.0;  // P(D >= d | backtrack) = r^{d-1}
  for (int64_t d = 1; d < m; ++d) {
    out.push_back(tail * (1 - r));
    tail *= r;
  }
  out.push_back(tail);
  return out;
}

stats::TestResult geometric_test(const std::vector<uint64_t>& samples, double q) {
  if (samples.empty()) throw InputError("no samples");
  uint64_t kmax = *std::max_element(samples.begin(), samples.end());
  std::vector<double> obs(kmax + 1, 0.0), probs(kmax + 1, 0.0);
  for (uint64_t s : samples) obs[s] += 1;
  double pk = 1 - q;
  for (uint64_t k = 0; k <= kmax; ++k, pk *= q) probs[k] = pk;
  return stats::chi_square_gof(obs, probs);
}

std::vector<uint64_t> renewal_times(const std::vector<int32_t>& m_trace) {
  int32_t top = 0;
  for (int32_t m : m_trace) top = std::max(top, m);
  std::vector<int64_t> last(top + 1, -1);
  for (size_t j = 0; j < m_trace.size(); ++j) last[m_trace[j]] = static_cast<int64_t>(j);
  std::vector<uint64_t> out(top + 1);
  int64_t best = -1;
  for (int32_t k = 0; k <= top; ++k) {
    best = std::max(best, last[k]);
    out[k] = static_cast<uint64_t>(best);
  }
  return out;
}

bool check_renewal(const std::vector<int32_t>& m_trace,
                   const std::vector<uint64_t>& pivot_steps, uint64_t extra) {
  if (m_trace.empty()) return false;
  const uint64_t J = m_trace.size() - 1;
  const uint64_t mJ = static_cast<uint64_t>(m_trace.back());
  if (pivot_steps.size() != mJ) return false;
  std::vector<uint64_t> l = renewal_times(m_trace);
  for (uint64_t k = 0; k <= mJ + extra; ++k) {
    // (pbar^J_{2k+1} - 1) / 2 from the current state: pivot steps below m_J,
    // then J, J + 1, ... since later weights are all 1.
    uint64_t lhs = k < mJ ? pivot_steps[k] : J + (k - mJ);
    uint64_t lk = k < l.size() ? l[k] : J;
    uint64_t rhs = lk + (k > mJ ? k - mJ : 0);
    if (lhs != rhs) return false;
  }
  return true;
}

LawReport diagnose_laws(const PivotRun& run, int depth_bins) {
  if (depth_bins < 2) throw InputError("need at least two depth bins");
  LawReport r;
  r.steps = run.m_trace.empty() ? 0 : run.m_trace.size() - 1;
  r.forward_expected = forward_probability(run.rho);
  std::vector<double> expected(depth_bins, 0.0);
  std::vector<double> observed(depth_bins, 0.0);
  uint64_t backs = 0;
  for (uint64_t j = 0; j < r.steps; ++j) {
    int64_t a = run.m_trace[j], b = run.m_trace[j + 1];
    if (b == a + 1) {
      ++r.forwards;
      continue;
    }
    if (a < 1) continue;
    ++backs;
    int64_t d = a - b;
    observed[std::min<int64_t>(d, depth_bins) - 1] += 1;
    std::vector<double> law = backtrack_depth_law(run.rho, a);
    for (size_t i = 0; i < law.size(); ++i)
      expected[std::min<size_t>(i, depth_bins - 1)] += law[i];
  }
  if (r.steps > 0) {
    r.forward_rate = static_cast<double>(r.forwards) / r.steps;
    r.forward_ci = stats::wilson(r.forwards, r.steps);
  }
  r.depth_counts.assign(depth_bins, 0);
  for (int i = 0; i < depth_bins; ++i) r.depth_counts[i] = static_cast<uint64_t>(observed[i]);
  if (backs > 0) {
    std::vector<double> probs(depth_bins);
    for (int i = 0; i < depth_bins; ++i) probs[i] = expected[i] / backs;
    r.depth_expected = probs;
    r.depth_test = stats::chi_square_gof(observed, probs);
  }

  std::vector<double> even;
  for (uint64_t k = 1; 2 * k < run.p.size(); ++k) even.push_back(static_cast<double>(run.p.weight(2 * k)));
  r.pivots_used = even.size();
  if (even.size() > 10) {
    for (int lag = 1; lag <= 5; ++lag) r.autocorrelation.push_back(stats::autocorrelation(even, lag));
    size_t h = even.size() / 2;
    r.halves_ks = stats::ks_two_sample(std::vector<double>(even.begin(), even.begin() + h),
                                       std::vector<double>(even.begin() + h, even.end()));
  }
  r.renewal_ok = check_renewal(run.m_trace, run.pivot_steps);
  r.m_unbounded = r.steps > 0 && run.m_trace.back() > run.m_trace[r.steps / 2];
  return r;
}

std::string run_to_json(const PivotRun& run) {
  using nlohmann::json;
  json j;
  j["semigroup"] = run.semigroup;
  j["model"] = run.model;
  j["seed"] = run.seed;
  j["rho"] = run.rho;
  j["steps"] = run.steps;
  j["n_letters"] = run.n_letters;
  j["settled"] = run.settled;
  j["truncated"] = run.truncated;
  j["w"] = run.w.weights();
  j["v"] = run.v.weights();
  j["hat_v"] = run.hat_v.weights();
  j["p"] = run.p.weights();
  j["m_trace"] = run.m_trace;
  json ev = json::array();
  for (const StepEvent& e : run.events) {
    ev.push_back({{"step", e.j},
                  {"branch", branch_name(e.branch)},
                  {"depth", e.m_before - e.m_after},
                  {"m_before", e.m_before},
                  {"m_after", e.m_after},
                  {"aligned", e.aligned},
                  {"penalty", e.tau},
                  {"mass", e.mass},
                  {"threshold", e.threshold},
                  {"examined", e.examined},
                  {"back_penalty", e.back_tau},
                  {"back_mass", e.back_mass},
                  {"back_threshold", e.back_threshold}});
  }
  j["events"] = std::move(ev);
  json vv = json::array();
  for (const VEvent& e : run.v_events)
    vv.push_back({{"pair", e.pair}, {"j0", e.j0}, {"penalty", e.tau},
                  {"mass", e.mass}, {"certified", e.certified}});
  j["v_events"] = std::move(vv);
  return j.dump(1);
}

std::string m_trace_csv(const PivotRun& run) {
  std::ostringstream os;
  os << "j,m\n";
  for (size_t j = 0; j < run.m_trace.size(); ++j) os << j << ',' << run.m_trace[j] << '\n';
  return os.str();
}

}  // namespace pivotal
