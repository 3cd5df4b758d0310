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


#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pivotal/error.hpp"
#include "pivotal/rng.hpp"
#include "pivotal/semigroup.hpp"
#include "pivotal/stats.hpp"

namespace pivotal {

// Block weights with prefix sums: block k covers [start(k), start(k+1)).
// Zero weights are allowed (an empty run of unknown blocks).
class Extraction {
 public:
  Extraction() = default;
  explicit Extraction(const std::vector<uint64_t>& weights) {
    for (uint64_t w : weights) push(w);
  }
  void push(uint64_t w) {
    w_.push_back(w);
    prefix_.push_back(prefix_.back() + w);
  }
  size_t size() const { return w_.size(); }
  uint64_t weight(size_t k) const { return w_.at(k); }
  uint64_t start(size_t k) const { return prefix_.at(k); }
  uint64_t total() const { return prefix_.back(); }
  const std::vector<uint64_t>& weights() const { return w_; }

 private:
  std::vector<uint64_t> w_;
  std::vector<uint64_t> prefix_{0};
};

template <class E>
struct TaggedBlock {
  bool schottky = false;
  std::vector<E> letters;
};

// Stream of m-letter blocks, each tagged unknown or Schottky. block(n) must
// be a pure function of n.
template <class E>
struct BlockSource {
  int m = 1;
  double alpha = 0.5;
  std::string name;
  std::function<TaggedBlock<E>(uint64_t)> block;
};

// Product of a block together with its letter span [begin, end).
template <class E>
struct SpanBlock {
  E product;
  uint64_t begin = 0;
  uint64_t end = 0;
};

enum class Branch : uint8_t { Forward = 0, Backtrack = 1, Reset = 2 };
const char* branch_name(Branch b);

struct StepEvent {
  uint64_t j = 0;
  Branch branch = Branch::Forward;
  int64_t m_before = 0;
  int64_t m_after = 0;
  bool aligned = false;   // head A odd A next
  double tau = 0.0;
  double mass = 0.0;      // 0 when the alignment test failed
  double threshold = 0.0;
  int64_t examined = 0;   // pivots visited while backtracking
  double back_tau = 0.0;  // data of the accepted pivot, if any
  double back_mass = 0.0;
  double back_threshold = 0.0;
};

struct VEvent {
  uint64_t pair = 0;  // the group starts at w-block 2 * pair
  uint64_t j0 = 0;
  double tau = 0.0;
  double mass = 0.0;
  bool certified = false;
};

namespace mass_kind {
constexpr uint64_t kV = 1;
constexpr uint64_t kForward = 2;
constexpr uint64_t kBacktrack = 3;
constexpr uint64_t kLeftRight = 4;
constexpr uint64_t kDiagnostics = 5;
}  // namespace mass_kind

inline uint64_t mass_key(uint64_t kind, uint64_t a, uint64_t b = 0) {
  return derive_seed(derive_seed(kind, a), b);
}

// First extraction and hat-v regrouping. Reads m-blocks in order, forms the
// w-layer (maximal unknown runs alternating with single Schottky blocks),
// then groups w-blocks into (prefix | s | u | s') quadruples with the
// penalized first-success rule, and emits hat-v blocks
// (prefix s u, s') on demand.
template <Semigroup S>
class Extractor {
 public:
  using E = typename S::Element;

  Extractor(S sg, BlockSource<E> src, const SchottkyMeasure<E>& nu_s,
            uint64_t seed, bool keep_letters = false)
      : sg_(std::move(sg)), src_(std::move(src)), nu_s_(&nu_s), seed_(seed),
        keep_letters_(keep_letters) {
    if (!src_.block) throw InputError("block source has no generator");
    if (src_.m < 1) throw InputError("block length must be positive");
  }

  // Hat-v block i; earlier blocks may have been released.
  const SpanBlock<E>& hat(uint64_t i) {
    if (i < base_) throw InternalError("hat-v block already released");
    while (base_ + hats_.size() <= i) next_group();
    return hats_[i - base_];
  }
  // Drop stored hat-v blocks with index < i.
  void release_before(uint64_t i) {
    while (base_ < i && !hats_.empty()) {
      hats_.pop_front();
      ++base_;
    }
  }

  const Extraction& w() const { return w_; }
  const Extraction& v() const { return v_; }
  const Extraction& hat_v() const { return hat_v_; }
  const std::vector<VEvent>& v_events() const { return v_events_; }
  const std::vector<E>& letters() const { return letters_; }
  uint64_t letters_consumed() const { return next_mblock_ * src_.m; }
  double rho() const { return nu_s_->rho(); }

 private:
  SpanBlock<E> read_wblock() {
    SpanBlock<E> b;
    b.begin = b.end = letters_consumed();
    if (pending_) {
      b = std::move(*pending_);
      pending_.reset();
      w_.push(1);
      return b;
    }
    b.product = sg_.identity();
    uint64_t count = 0;
    for (;;) {
      TaggedBlock<E> t = src_.block(next_mblock_);
      if (static_cast<int>(t.letters.size()) != src_.m)
        throw InputError("block source returned a block of the wrong length");
      uint64_t begin = letters_consumed();
      ++next_mblock_;
      if (keep_letters_)
        letters_.insert(letters_.end(), t.letters.begin(), t.letters.end());
      E prod = t.letters.front();
      for (size_t i = 1; i < t.letters.size(); ++i) prod = sg_.multiply(prod, t.letters[i]);
      if (t.schottky) {
        pending_ = SpanBlock<E>{std::move(prod), begin, letters_consumed()};
        break;
      }
      b.product = count == 0 ? std::move(prod) : sg_.multiply(b.product, prod);
      b.end = letters_consumed();
      ++count;
    }
    w_.push(count);
    return b;
  }

  void next_group() {
    const double rho = nu_s_->rho();
    uint64_t pair = w_.size() / 2;
    SpanBlock<E> prefix = read_wblock();
    for (uint64_t j = 0;; ++j) {
      SpanBlock<E> s = read_wblock();
      SpanBlock<E> u = read_wblock();
      bool ok = sg_.aligned(prefix.product, s.product) && sg_.aligned(s.product, u.product);
      double tau = keyed_uniform(seed_, tag::kPenaltyV, pair + j);
      double mass = 0;
      if (ok) {
        MassResult r = nu_s_->mass(sg_, &prefix.product, &u.product, nullptr,
                                   mass_key(mass_kind::kV, pair + j));
        mass = r.value;
        ok = tau < (1 - 2 * rho) / mass;
      }
      if (ok) {
        SpanBlock<E> tail = read_wblock();
        VEvent ev;
        ev.pair = pair;
        ev.j0 = j;
        ev.tau = tau;
        ev.mass = mass;
        ev.certified = sg_.aligned(prefix.product, s.product) && sg_.aligned(s.product, u.product);
        v_events_.push_back(ev);
        v_.push(2 * j + 1);
        v_.push(1);
        v_.push(1);
        v_.push(1);
        hat_v_.push(2 * j + 3);
        hat_v_.push(1);
        SpanBlock<E> even;
        even.product = sg_.multiply(sg_.multiply(prefix.product, s.product), u.product);
        even.begin = prefix.begin;
        even.end = u.end;
        hats_.push_back(std::move(even));
        hats_.push_back(std::move(tail));
        return;
      }
      prefix.product = sg_.multiply(sg_.multiply(prefix.product, s.product), u.product);
      prefix.end = u.end;
    }
  }

  S sg_;
  BlockSource<E> src_;
  const SchottkyMeasure<E>* nu_s_;
  uint64_t seed_;
  bool keep_letters_;
  uint64_t next_mblock_ = 0;
  std::optional<SpanBlock<E>> pending_;
  Extraction w_, v_, hat_v_;
  std::vector<VEvent> v_events_;
  std::deque<SpanBlock<E>> hats_;
  uint64_t base_ = 0;
  std::vector<E> letters_;
};

// The pivot algorithm with penalties on an alternating stream
// gamma_0 | gamma_1, gamma_2 | gamma_3, gamma_4 | ...
// Penalties are read through tau(offset + i), so a run started on a
// shifted stream can reuse the same penalty sequence.
template <Semigroup S>
class PivotEngine {
 public:
  using E = typename S::Element;
  using Tau = std::function<double(uint64_t)>;

  struct Pivot {
    E even;         // gamma^p_{2k}
    E odd;          // gamma^p_{2k+1}
    E next;         // the first block of gamma^p_{2k+2}
    uint64_t step;  // (pbar_{2k+1} - 1) / 2, relative to the offset
  };

  PivotEngine(S sg, const SchottkyMeasure<E>& nu_s, Tau tau,
              uint64_t offset = 0)
      : sg_(std::move(sg)), nu_s_(&nu_s), tau_(std::move(tau)),
        offset_(offset) {
    if (!tau_) throw InputError("penalty source is empty");
  }

  void start(E gamma0) {
    head_ = std::move(gamma0);
    j_ = 0;
    pivots_.clear();
    m_trace_.assign(1, 0);
  }

  // Step j: consumes gamma_{2j+1} and gamma_{2j+2}.
  StepEvent step(const E& odd, const E& next) {
    const double rho = nu_s_->rho();
    StepEvent ev;
    ev.j = j_;
    ev.m_before = m();
    const uint64_t tj = offset_ + j_;
    ev.tau = tau_(tj);
    ev.aligned = sg_.aligned(head_, odd) && sg_.aligned(odd, next);
    bool forward = false;
    if (ev.aligned) {
      MassResult r = nu_s_->mass(sg_, &head_, &next, nullptr,
                                 mass_key(mass_kind::kForward, tj));
      ev.mass = r.value;
      ev.threshold = (1 - 2 * rho) / r.value;
      forward = ev.tau < ev.threshold;
    }
    if (forward) {
      ev.branch = Branch::Forward;
      pivots_.push_back(Pivot{std::move(head_), odd, next, j_});
      head_ = next;
    } else {
      E t = sg_.multiply(sg_.multiply(head_, odd), next);
      bool found = false;
      for (size_t k = pivots_.size(); k-- > 0;) {
        Pivot& P = pivots_[k];
        ++ev.examined;
        E eo = sg_.multiply(P.even, P.odd);
        if (sg_.aligned(P.odd, t)) {
          MassResult r = nu_s_->mass(sg_, &P.even, &P.next, &t,
                                     mass_key(mass_kind::kBacktrack, tj, offset_ + P.step));
          double thr = (1 - 3 * rho) / r.value;
          double tk = tau_(offset_ + P.step);
          if (tk < thr) {
            ev.back_tau = tk;
            ev.back_mass = r.value;
            ev.back_threshold = thr;
            head_ = sg_.multiply(eo, t);
            pivots_.resize(k);
            found = true;
            break;
          }
        }
        t = sg_.multiply(eo, t);
      }
      if (!found) {
        head_ = std::move(t);
        pivots_.clear();
        ev.branch = Branch::Reset;
      } else {
        ev.branch = Branch::Backtrack;
      }
    }
    ++j_;
    ev.m_after = m();
    m_trace_.push_back(static_cast<int32_t>(m()));
    return ev;
  }

  int64_t m() const { return static_cast<int64_t>(pivots_.size()); }
  uint64_t j() const { return j_; }
  const E& head() const { return head_; }
  const std::vector<Pivot>& pivots() const { return pivots_; }
  const std::vector<int32_t>& m_trace() const { return m_trace_; }

  // p^j_0 .. p^j_{2 m_j + 1}; all later entries equal 1.
  std::vector<uint64_t> p_state() const {
    std::vector<uint64_t> p;
    uint64_t start = 0;
    for (const Pivot& P : pivots_) {
      p.push_back(2 * P.step + 1 - start);
      p.push_back(1);
      start = 2 * P.step + 2;
    }
    p.push_back(2 * j_ + 1 - start);
    p.push_back(1);
    return p;
  }

 private:
  S sg_;
  const SchottkyMeasure<E>* nu_s_;
  Tau tau_;
  uint64_t offset_;
  E head_{};
  uint64_t j_ = 0;
  std::vector<Pivot> pivots_;
  std::vector<int32_t> m_trace_{0};
};

// Pivots whose index is at least this far below the final chain position are
// treated as settled; later ones may still be undone by a backtrack.
constexpr uint64_t kSettleMargin = 64;

struct PivotRun {
  std::string semigroup;
  std::string model;
  uint64_t seed = 0;
  double rho = 0.0;
  uint64_t steps = 0;
  uint64_t n_letters = 0;
  Extraction w;      // m-block units
  Extraction v;      // w-block units
  Extraction hat_v;  // w-block units
  Extraction p;      // hat-v units, settled blocks only
  std::vector<int32_t> m_trace;
  std::vector<uint64_t> pivot_steps;  // (pbar_{2k+1} - 1) / 2 at the end
  std::vector<StepEvent> events;
  std::vector<VEvent> v_events;
  uint64_t settled = 0;
  bool truncated = false;
};

struct RunOptions {
  uint64_t steps = 1000;
  uint64_t max_letters = 0;  // 0: unlimited
  bool keep_blocks = false;  // hat-v products and spans
  bool keep_letters = false;
  bool keep_events = true;
  uint64_t settle_margin = kSettleMargin;
  int64_t stop_at_m = 0;  // > 0: stop once the chain reaches this level
};

template <Semigroup S>
struct PivotResult {
  PivotRun run;
  std::vector<SpanBlock<typename S::Element>> hats;
  std::vector<typename S::Element> letters;
};

inline double penalty_p(uint64_t seed, uint64_t i) {
  return keyed_uniform(seed, tag::kPenaltyP, i);
}

// Settled prefix of p from the final pivot steps.
Extraction settled_p(const std::vector<uint64_t>& pivot_steps, uint64_t settled);

template <Semigroup S>
PivotResult<S> run_pivot(const S& sg, const BlockSource<typename S::Element>& src,
                         const SchottkyMeasure<typename S::Element>& nu_s,
                         uint64_t seed, const RunOptions& opt) {
  using E = typename S::Element;
  PivotResult<S> out;
  Extractor<S> ex(sg, src, nu_s, seed, opt.keep_letters);
  PivotEngine<S> eng(sg, nu_s, [seed](uint64_t i) { return penalty_p(seed, i); });
  auto keep = [&](uint64_t i) {
    if (opt.keep_blocks) out.hats.push_back(ex.hat(i));
  };
  eng.start(ex.hat(0).product);
  keep(0);
  for (uint64_t j = 0; j < opt.steps; ++j) {
    if (opt.max_letters && ex.letters_consumed() >= opt.max_letters) {
      out.run.truncated = true;
      break;
    }
    const E odd = ex.hat(2 * j + 1).product;
    keep(2 * j + 1);
    keep(2 * j + 2);
    StepEvent ev = eng.step(odd, ex.hat(2 * j + 2).product);
    if (opt.keep_events) out.run.events.push_back(ev);
    ex.release_before(2 * j + 2);
    if (opt.stop_at_m > 0 && eng.m() >= opt.stop_at_m) break;
  }
  PivotRun& r = out.run;
  r.semigroup = S::kName;
  r.model = src.name;
  r.seed = seed;
  r.rho = nu_s.rho();
  r.steps = eng.j();
  r.n_letters = ex.letters_consumed();
  r.w = ex.w();
  r.v = ex.v();
  r.hat_v = ex.hat_v();
  r.m_trace = eng.m_trace();
  for (const auto& P : eng.pivots()) r.pivot_steps.push_back(P.step);
  r.v_events = ex.v_events();
  uint64_t m = static_cast<uint64_t>(eng.m());
  r.settled = m > opt.settle_margin ? m - opt.settle_margin : 0;
  r.p = settled_p(r.pivot_steps, r.settled);
  if (opt.keep_letters) out.letters = ex.letters();
  return out;
}

// Reruns the engine on stored hat-v products starting at block `begin`
// (even) with penalties shifted by begin / 2.
template <Semigroup S>
std::vector<uint64_t> rerun_pivot_steps(const S& sg,
                                        const SchottkyMeasure<typename S::Element>& nu_s,
                                        const std::vector<SpanBlock<typename S::Element>>& hats,
                                        uint64_t begin, uint64_t seed,
                                        std::vector<int32_t>* m_trace = nullptr) {
  if (begin % 2 != 0) throw InputError("the shifted stream must start at an even block");
  PivotEngine<S> eng(sg, nu_s, [seed](uint64_t i) { return penalty_p(seed, i); },
                     begin / 2);
  eng.start(hats.at(begin).product);
  for (uint64_t i = begin + 2; i < hats.size(); i += 2)
    eng.step(hats[i - 1].product, hats[i].product);
  std::vector<uint64_t> steps;
  for (const auto& P : eng.pivots()) steps.push_back(P.step);
  if (m_trace) *m_trace = eng.m_trace();
  return steps;
}

// ---------------------------------------------------------------------------
// Laws and diagnostics.

// P(m_{j+1} = m_j + 1 | past).
double forward_probability(double rho);
// P(m_j - m_{j+1} = d | backtrack, m_j = m) for d = 1..m.
std::vector<double> backtrack_depth_law(double rho, int64_t m);
// chi-square test of integer samples against P(k) = q^k (1 - q).
stats::TestResult geometric_test(const std::vector<uint64_t>& samples, double q);
// max{j : m_j <= k} for k = 0..max(m).
std::vector<uint64_t> renewal_times(const std::vector<int32_t>& m_trace);
// The chain identity (pbar^J_{2k+1} - 1) / 2 = max{j <= J : m_j <= k} +
// (k - m_J)^+ at the final step J, for k = 0..m_J + extra.
bool check_renewal(const std::vector<int32_t>& m_trace,
                   const std::vector<uint64_t>& pivot_steps, uint64_t extra = 4);

struct LawReport {
  uint64_t steps = 0;
  uint64_t forwards = 0;
  double forward_rate = 0.0;
  double forward_expected = 0.0;
  stats::Interval forward_ci;
  // Backtracks from m_j >= 1, by depth 1..K (last bin pools deeper ones).
  std::vector<uint64_t> depth_counts;
  std::vector<double> depth_expected;
  stats::TestResult depth_test;
  std::vector<double> autocorrelation;  // lags 1..5 of (p_{2k})_{k >= 1}
  stats::TestResult halves_ks;
  uint64_t pivots_used = 0;
  bool renewal_ok = false;
  bool m_unbounded = false;  // the chain drifts upward
};

LawReport diagnose_laws(const PivotRun& run, int depth_bins = 6);

std::string run_to_json(const PivotRun& run);
std::string m_trace_csv(const PivotRun& run);

}  // namespace pivotal
