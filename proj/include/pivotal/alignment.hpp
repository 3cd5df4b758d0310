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

#include "pivotal/linalg.hpp"

namespace pivotal::align {

// Absolute slack on inequalities between quantities normalized to [0,1].
inline constexpr double kSlack = 1e-9;

// Thresholds and amplification factors of the alignment calculus.
struct ConstantsLedger {
  static double sigma_transmission(double e) { return e * e / 4; }
  static double sigma_chain(double e) { return e * e / 8; }
  static double sigma_rigidity(double e) { return e * e / 12; }
  static double sigma_triple(double e) { return e * e * e * e / 4; }
  static double sigma_quartic(double e) { return e * e * e * e / 12; }
  static double sigma_schottky(double e) {
    double e2 = e * e;
    return e2 * e2 * e2 / 48;
  }
  static double amp_limit(double e) { return 2 / e; }
  static double amp_product(double e) { return 1 / (e * e); }
  static double amp_triple(double e) { return 4 / (e * e * e * e); }
  static double amp_chain(double e, int n);
};

struct Verdict {
  std::string lemma;
  uint64_t seed = 0;
  bool applicable = false;
  bool pass = true;
  // Two sides of the tightest conclusion (or the failing one).
  double lhs = 0.0;
  double rhs = 0.0;
  std::string conclusion;
  // Smallest signed slack over all conclusions (negative = violated).
  double margin = 0.0;
};

// Which contraction gate an element of a chain was verified against.
enum class SigmaGate { None, Chain, Rigidity, Schottky };

struct AlignedChain {
  double eps = 0.5;
  std::vector<Mat> links;
  std::vector<bool> link_aligned;  // link_aligned[k]: g_k A^eps g_{k+1}
  std::vector<double> sigma;
  std::vector<SigmaGate> gate;     // strictest gate satisfied
};

// Computes flags and gates; eps must lie in (0, 1/2].
AlignedChain make_chain(std::vector<Mat> links, double eps);

struct ChainVerdict {
  Verdict chain;      // head alignment, norm and sigma bounds
  Verdict partition;  // split alignment at every cut
  bool head_alignment = true;
  bool norm_bound = true;
  bool sigma_bound = true;
};

struct LimitLine {
  ProjPoint l_inf;
  std::vector<double> bounds;  // bounds[k-1] = (2/eps) sigma(g_0...g_{k-1})
  int used = 0;                // prefix length behind l_inf
  bool reached_tol = false;
};

Verdict check_lipschitz(const Mat& f, const std::vector<double>& x,
                        const std::vector<double>& y);
// u' = h x with x in V^eps(h) against the top direction of h.
Verdict check_cone_diameter(const Mat& h, const std::vector<double>& x,
                            double eps);
Verdict check_sharp(const Mat& g, const Mat& h, double eps);
Verdict check_c_prod(const Mat& g, const Mat& h, double eps);
Verdict check_transmission(const Mat& f, const Mat& g, const Mat& h,
                           double eps);
Verdict check_triple(const Mat& f, const Mat& g, const Mat& h, double eps);
ChainVerdict check_chain(const AlignedChain& chain);
Verdict check_limit_line(const AlignedChain& chain);
LimitLine limit_line(const AlignedChain& chain, double tol = 1e-12);
Verdict check_eigen_align(const Mat& g, double eps);
Verdict check_rigidity(const Mat& f, const Mat& g1, const Mat& g2,
                       const Mat& h, double eps);
// gs = (g_0, ..., g_{2n}); f and h may be empty matrices to skip the second
// conclusion.
Verdict check_alternating(const Mat& g_minus1, const std::vector<Mat>& gs,
                          const Mat& f, const Mat& h, double eps);

enum class Lemma {
  Lipschitz,
  ConeDiameter,
  Sharp,
  CProd,
  Transmission,
  Triple,
  Chain,
  LimitLine,
  Rigidity,
  Partition,
  Alternating,
  EigenAlign,
};

const std::vector<Lemma>& all_lemmas();
std::string lemma_id(Lemma l);
Lemma lemma_from_id(const std::string& id);

struct SuiteResult {
  Lemma lemma = Lemma::Lipschitz;
  long instances = 0;
  long violations = 0;
  long rejected = 0;    // generated instances that missed a hypothesis
  double worst_margin = 0.0;
  std::vector<Verdict> verdicts;  // kept only when requested
};

// Draws `instances` hypothesis-satisfying random instances and checks the
// conclusions. Instance i uses its own keyed stream, so the result does not
// depend on `threads`.
SuiteResult run_suite(Lemma lemma, long instances, uint64_t seed,
                      int threads = 1, bool keep_verdicts = false);

std::string verdicts_to_json(const std::vector<Verdict>& v);

}  // namespace pivotal::align
