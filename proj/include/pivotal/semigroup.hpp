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

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pivotal/error.hpp"
#include "pivotal/linalg.hpp"
#include "pivotal/rng.hpp"

namespace pivotal {

// Reduced word in the free group on a, b, c. Letters are +-1, +-2, +-3;
// a negative letter is the inverse generator.
class FreeWord {
 public:
  FreeWord() = default;
  // Reduces the input.
  explicit FreeWord(const std::vector<int8_t>& letters);
  static FreeWord letter(int l);
  // Syntax: letters a b c, upper case for inverses, optional ^n (n may be
  // negative) after a letter; "1" or "" is the empty word.
  static FreeWord parse(const std::string& s);

  const std::vector<int8_t>& letters() const { return w_; }
  size_t length() const { return w_.size(); }
  bool empty() const { return w_.empty(); }
  int first() const { return w_.front(); }
  int last() const { return w_.back(); }
  FreeWord inverse() const;
  std::string str() const;

  // In-place right multiplication with free reduction.
  void append(const FreeWord& v);
  friend bool operator==(const FreeWord&, const FreeWord&) = default;

 private:
  std::vector<int8_t> w_;
};

FreeWord fg_concat(const FreeWord& u, const FreeWord& v);
// No cancellation at the junction; empty operands raise DomainError.
bool fg_aligned(const FreeWord& u, const FreeWord& v);
// Every reduced word of length <= n (for exhaustive checks).
std::vector<FreeWord> all_reduced_words(int n);

template <class S>
concept Semigroup = requires(const S& s, const typename S::Element& e) {
  { s.identity() } -> std::convertible_to<typename S::Element>;
  { s.multiply(e, e) } -> std::convertible_to<typename S::Element>;
  { s.aligned(e, e) } -> std::convertible_to<bool>;
};

struct FreeGroupSemigroup {
  using Element = FreeWord;
  static constexpr const char* kName = "free-group";
  FreeWord identity() const { return {}; }
  FreeWord multiply(const FreeWord& a, const FreeWord& b) const {
    return fg_concat(a, b);
  }
  // The identity is aligned with everything.
  bool aligned(const FreeWord& a, const FreeWord& b) const {
    return a.empty() || b.empty() || a.last() != -b.first();
  }
};

// Matrices up to scale with the relation A^eps. Products are kept at unit
// norm (alignment and sigma are scale free); a zero operand is not aligned.
struct MatrixSemigroup {
  using Element = Mat;
  static constexpr const char* kName = "matrix";
  int dim = 2;
  double eps = 0.5;
  Mat identity() const { return Mat::identity(dim); }
  Mat multiply(const Mat& a, const Mat& b) const { return normalized(a * b); }
  bool aligned(const Mat& a, const Mat& b) const {
    if (a.is_zero() || b.is_zero()) return false;
    return alignment_ratio(a, b) >= eps;
  }
  double contraction(const Mat& a) const { return sigma(a); }
};

struct MassResult {
  double value = 1.0;
  double se = 0.0;   // standard error (0 for exact evaluation)
  bool exact = true;
  int conditions = 0;
};

// The law nu_s of Schottky elements, either finitely supported (masses by
// exact enumeration) or given by a sampler (masses by Monte Carlo with a
// fixed budget, keyed by the query index so repeated queries agree).
template <class E>
class SchottkyMeasure {
 public:
  using Sampler = std::function<E(Stream&)>;

  SchottkyMeasure() = default;

  static SchottkyMeasure finite(std::vector<E> atoms,
                                std::vector<double> weights, double rho) {
    if (atoms.empty() || atoms.size() != weights.size())
      throw InputError("finite measure needs matching atoms and weights");
    double t = 0;
    for (double w : weights) {
      if (!(w > 0) || !std::isfinite(w)) throw InputError("weights must be positive");
      t += w;
    }
    SchottkyMeasure m;
    m.check_rho(rho);
    m.atoms_ = std::move(atoms);
    m.weights_ = std::move(weights);
    for (double& w : m.weights_) w /= t;
    m.cumulative_.resize(m.weights_.size());
    double c = 0;
    for (size_t i = 0; i < m.weights_.size(); ++i) m.cumulative_[i] = (c += m.weights_[i]);
    return m;
  }

  static SchottkyMeasure sampled(Sampler sampler, double rho, uint64_t seed,
                                 int budget = 4096) {
    if (budget < 1) throw InputError("budget must be positive");
    SchottkyMeasure m;
    m.check_rho(rho);
    m.sampler_ = std::move(sampler);
    m.seed_ = seed;
    m.budget_ = budget;
    return m;
  }

  bool is_finite() const { return !atoms_.empty(); }
  double rho() const { return rho_; }
  int budget() const { return budget_; }
  const std::vector<E>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }

  E sample(Stream& r) const {
    if (is_finite()) {
      double u = r.uniform();
      for (size_t i = 0; i < cumulative_.size(); ++i)
        if (u < cumulative_[i]) return atoms_[i];
      return atoms_.back();
    }
    return sampler_(r);
  }

  // nu_s{s : left A s, s A right, s A tail} with null pointers meaning "no
  // condition". Raises ModelError when the value falls below the Schottky
  // guarantee 1 - rho * (#conditions) (minus 3 standard errors).
  template <class S>
  MassResult mass(const S& sg, const E* left, const E* right, const E* tail,
                  uint64_t query) const {
    MassResult r = raw_mass(sg, left, right, tail, query);
    double bound = 1.0 - rho_ * r.conditions;
    double tol = r.exact ? 1e-12 : 3 * r.se + 1e-12;
    if (r.value < bound - tol) {
      throw ModelError("Schottky mass " + std::to_string(r.value) +
                       " below guaranteed " + std::to_string(bound) +
                       ": the measure is not rho-Schottky for this relation");
    }
    return r;
  }

  // Same value without the consistency check.
  template <class S>
  MassResult raw_mass(const S& sg, const E* left, const E* right,
                      const E* tail, uint64_t query) const {
    auto ok = [&](const E& s) {
      return (!left || sg.aligned(*left, s)) && (!right || sg.aligned(s, *right)) &&
             (!tail || sg.aligned(s, *tail));
    };
    MassResult r = evaluate(ok, query);
    r.conditions = (left != nullptr) + (right != nullptr) + (tail != nullptr);
    return r;
  }

  // nu_s{s : pred(s)} for an arbitrary predicate.
  template <class Pred>
  MassResult mass_where(const Pred& pred, uint64_t query) const {
    return evaluate(pred, query);
  }

  // E[f(s1, s2)] for s1, s2 independent with law nu_s; f returns 0 or 1.
  // Exact double sum for finite measures, Monte Carlo over pairs otherwise.
  template <class F>
  MassResult pair_mass(const F& f, uint64_t query) const {
    MassResult r;
    if (is_finite()) {
      double v = 0;
      for (size_t i = 0; i < atoms_.size(); ++i)
        for (size_t k = 0; k < atoms_.size(); ++k)
          if (f(atoms_[i], atoms_[k])) v += weights_[i] * weights_[k];
      r.value = std::min(1.0, v);
      return r;
    }
    Stream st(seed_, tag::kMass, query);
    long hits = 0;
    for (int i = 0; i < budget_; ++i) {
      E a = sampler_(st);
      E b = sampler_(st);
      if (f(a, b)) ++hits;
    }
    r.exact = false;
    r.value = static_cast<double>(hits) / budget_;
    double p = std::clamp(r.value, 1.0 / budget_, 1.0 - 1.0 / budget_);
    r.se = std::sqrt(p * (1 - p) / budget_);
    return r;
  }

  // nu_s{s : not h A s} (side 0) or nu_s{s : not s A h} (side 1), without
  // any consistency check.
  template <class S>
  MassResult misalignment(const S& sg, const E& h, int side,
                          uint64_t query) const {
    auto bad = [&](const E& s) {
      return side == 0 ? !sg.aligned(h, s) : !sg.aligned(s, h);
    };
    return evaluate(bad, query);
  }

 private:
  void check_rho(double rho) {
    if (!(rho > 0 && rho < 0.2)) throw InputError("rho must lie in (0, 1/5)");
    rho_ = rho;
  }

  template <class Pred>
  MassResult evaluate(const Pred& pred, uint64_t query) const {
    MassResult r;
    if (is_finite()) {
      double v = 0;
      for (size_t i = 0; i < atoms_.size(); ++i)
        if (pred(atoms_[i])) v += weights_[i];
      r.value = std::min(1.0, v);
      return r;
    }
    Stream st(seed_, tag::kMass, query);
    long hits = 0;
    for (int i = 0; i < budget_; ++i)
      if (pred(sampler_(st))) ++hits;
    r.exact = false;
    r.value = static_cast<double>(hits) / budget_;
    // Floor the standard error at one count so that an all-pass sample
    // still carries uncertainty.
    double p = std::clamp(r.value, 1.0 / budget_, 1.0 - 1.0 / budget_);
    r.se = std::sqrt(p * (1 - p) / budget_);
    return r;
  }

  std::vector<E> atoms_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  Sampler sampler_;
  uint64_t seed_ = 0;
  int budget_ = 4096;
  double rho_ = 1.0 / 6;
};

// Uniform measure on the six generators: the 1/6-Schottky measure of the
// free-group toy model.
SchottkyMeasure<FreeWord> uniform_generators(double rho = 1.0 / 6);

// Finite-support measures from JSON: [{"element": ..., "weight": w}, ...].
// Matrices are row-major arrays (square), words use FreeWord::parse syntax.
SchottkyMeasure<Mat> matrix_measure_from_json(const std::string& text, double rho);
SchottkyMeasure<FreeWord> word_measure_from_json(const std::string& text, double rho);
std::string matrix_measure_to_json(const SchottkyMeasure<Mat>& m);

}  // namespace pivotal
