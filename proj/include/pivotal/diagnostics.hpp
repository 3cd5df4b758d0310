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
#include <string>
#include <vector>

#include "pivotal/pivot.hpp"
#include "pivotal/schottky.hpp"

namespace pivotal {

// Products of the final p-blocks read from stored hat-v blocks. Only blocks
// below 2 * run.settled are available.
template <Semigroup S>
class PBlocks {
 public:
  using E = typename S::Element;
  PBlocks(const S& sg, const PivotRun& run, const std::vector<SpanBlock<E>>& hats)
      : sg_(sg), run_(&run), hats_(&hats) {
    if (hats.size() < 2 * run.steps + 1) throw InputError("the run did not keep its hat-v blocks");
  }
  size_t count() const { return 2 * run_->settled; }
  // pbar_i in hat-v units.
  uint64_t start(size_t i) const {
    if (i == 0) return 0;
    uint64_t s = run_->pivot_steps.at((i - 1) / 2);
    return i % 2 == 1 ? 2 * s + 1 : 2 * s + 2;
  }
  uint64_t end(size_t i) const { return i % 2 == 0 ? 2 * run_->pivot_steps.at(i / 2) + 1 : start(i) + 1; }
  E block(size_t i) const { return span(start(i), end(i)); }
  // Product of hat-v blocks [a, b).
  E span(uint64_t a, uint64_t b) const {
    E g = sg_.identity();
    for (uint64_t t = a; t < b; ++t) g = t == a ? (*hats_)[t].product : sg_.multiply(g, (*hats_)[t].product);
    return g;
  }
  const E& hat(uint64_t t) const { return hats_->at(t).product; }
  // First hat-v block after the odd block 2k + 1.
  const E& next(size_t k) const { return hat(2 * run_->pivot_steps.at(k) + 2); }

 private:
  S sg_;
  const PivotRun* run_;
  const std::vector<SpanBlock<E>>* hats_;
};

struct RecursiveReport {
  uint64_t pivots = 0;
  uint64_t triples = 0;
  uint64_t violations = 0;
};

// Pivot certificates gamma^p_{2k} A gamma^p_{2k+1} A gamma_{pbar_{2k+2}} and
// the decomposition of each even block at the times j with m_j = k + 1.
template <Semigroup S>
RecursiveReport check_recursive_alignment(const S& sg, const PivotRun& run,
                                          const std::vector<SpanBlock<typename S::Element>>& hats) {
  PBlocks<S> pb(sg, run, hats);
  RecursiveReport rep;
  for (size_t k = 0; k < run.settled; ++k) {
    ++rep.pivots;
    auto odd = pb.block(2 * k + 1);
    if (!(sg.aligned(pb.block(2 * k), odd) && sg.aligned(odd, pb.next(k)))) ++rep.violations;
    if (k + 1 >= run.settled) break;
    const uint64_t lk = run.pivot_steps[k], lk1 = run.pivot_steps[k + 1];
    const uint64_t base = 2 * lk + 2;
    std::vector<uint64_t> b;
    for (uint64_t j = lk + 1; j <= lk1; ++j)
      if (run.m_trace.at(j) == static_cast<int32_t>(k + 1)) b.push_back(j);
    if (b.empty() || b.front() != lk + 1 || b.back() != lk1) {
      ++rep.violations;
      continue;
    }
    for (size_t i = 0; i + 1 < b.size(); ++i) {
      ++rep.triples;
      auto x = pb.span(base, 2 * b[i] + 1);
      const auto& mid = pb.hat(2 * b[i] + 1);
      auto y = pb.span(2 * b[i] + 2, 2 * b[i + 1] + 1);
      if (!(sg.aligned(x, mid) && sg.aligned(mid, y))) ++rep.violations;
    }
  }
  return rep;
}

struct MatrixDiagnostics {
  uint64_t heredity_checked = 0;
  uint64_t heredity_violations = 0;
  double heredity_min_ratio = 1.0;  // min ratio / (eps / 2) over checks
  RecursiveReport recursive;
  uint64_t sigma_checked = 0;
  uint64_t sigma_violations = 0;
  double sigma_max = 0.0;
  uint64_t schottky_checked = 0;
  uint64_t schottky_violations = 0;
  double schottky_min = 1.0;
  bool ok() const {
    return heredity_violations == 0 && recursive.violations == 0 && sigma_violations == 0 &&
           schottky_violations == 0;
  }
};

MatrixDiagnostics matrix_diagnostics(const SchottkyModel& model, const SchottkyMeasure<Mat>& nu_s,
                                     const PivotRun& run, const std::vector<SpanBlock<Mat>>& hats,
                                     int samples, uint64_t seed);

struct LeftRight {
  int64_t l_f = -1;  // -1: not determined within the settled pivots
  bool l_certified = false;
  uint64_t q_n = 0;
  int64_t r_n = -1;
  bool r_escape = false;  // r_n >= q_n
  bool r_certified = false;
  int64_t c_n = -1;
  bool c_escape = false;  // 2 c_n + 1 >= q_n
  bool c_certified = false;
  uint64_t low_conditionals = 0;  // conditional masses found below the lemma's bound
};

// f: covector (1 x d) or matrix; h: vector (d x 1) or matrix; n in hat-v
// units with pbar_{2 q_n} inside the settled range.
LeftRight left_right_pivots(const SchottkyModel& model, const SchottkyMeasure<Mat>& nu_s,
                            const PivotRun& run, const std::vector<SpanBlock<Mat>>& hats,
                            const Mat& f, const Mat& h, uint64_t n, uint64_t seed);

}  // namespace pivotal
