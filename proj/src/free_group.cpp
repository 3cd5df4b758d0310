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

#include <cctype>

#include "json.hpp"
#include "pivotal/semigroup.hpp"

namespace pivotal {

FreeWord::FreeWord(const std::vector<int8_t>& letters) {
  for (int8_t l : letters) {
    if (l == 0 || l < -3 || l > 3) throw InputError("letter out of range");
    if (!w_.empty() && w_.back() == -l)
      w_.pop_back();
    else
      w_.push_back(l);
  }
}

FreeWord FreeWord::letter(int l) { return FreeWord({static_cast<int8_t>(l)}); }

FreeWord FreeWord::parse(const std::string& s) {
  std::vector<int8_t> out;
  size_t i = 0;
  auto skip = [&] {
    while (i < s.size() && (std::isspace(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
  };
  skip();
  if (s.substr(i) == "1") return {};
  while (i < s.size()) {
    char ch = s[i];
    int l;
    if (ch >= 'a' && ch <= 'c') l = ch - 'a' + 1;
    else if (ch >= 'A' && ch <= 'C') l = -(ch - 'A' + 1);
    else throw InputError("bad letter in word: " + s);
    ++i;
    long n = 1;
    if (i < s.size() && s[i] == '^') {
      ++i;
      size_t used = 0;
      try {
        n = std::stol(s.substr(i), &used);
      } catch (...) {
        throw InputError("bad exponent in word: " + s);
      }
      i += used;
    }
    if (n < 0) {
      l = -l;
      n = -n;
    }
    for (long k = 0; k < n; ++k) out.push_back(static_cast<int8_t>(l));
    skip();
  }
  return FreeWord(out);
}

FreeWord FreeWord::inverse() const {
  FreeWord r;
  r.w_.assign(w_.rbegin(), w_.rend());
  for (auto& l : r.w_) l = static_cast<int8_t>(-l);
  return r;
}

std::string FreeWord::str() const {
  if (w_.empty()) return "1";
  std::string s;
  for (size_t i = 0; i < w_.size();) {
    size_t j = i;
    while (j < w_.size() && w_[j] == w_[i]) ++j;
    int l = w_[i];
    s += l > 0 ? static_cast<char>('a' + l - 1) : static_cast<char>('A' - l - 1);
    if (j - i > 1) s += "^" + std::to_string(j - i);
    i = j;
  }
  return s;
}

void FreeWord::append(const FreeWord& v) {
  size_t k = 0;
  while (k < v.w_.size() && !w_.empty() && w_.back() == -v.w_[k]) {
    w_.pop_back();
    ++k;
  }
  w_.insert(w_.end(), v.w_.begin() + static_cast<long>(k), v.w_.end());
}

FreeWord fg_concat(const FreeWord& u, const FreeWord& v) {
  FreeWord r = u;
  r.append(v);
  return r;
}

bool fg_aligned(const FreeWord& u, const FreeWord& v) {
  if (u.empty() || v.empty()) throw DomainError("alignment of the empty word");
  return u.last() != -v.first();
}

std::vector<FreeWord> all_reduced_words(int n) {
  std::vector<FreeWord> out{FreeWord()};
  std::vector<FreeWord> layer{FreeWord()};
  static const int kLetters[6] = {1, -1, 2, -2, 3, -3};
  for (int len = 1; len <= n; ++len) {
    std::vector<FreeWord> next;
    for (const FreeWord& w : layer)
      for (int l : kLetters) {
        if (!w.empty() && w.last() == -l) continue;
        next.push_back(fg_concat(w, FreeWord::letter(l)));
      }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

SchottkyMeasure<FreeWord> uniform_generators(double rho) {
  std::vector<FreeWord> atoms;
  for (int l : {1, -1, 2, -2, 3, -3}) atoms.push_back(FreeWord::letter(l));
  return SchottkyMeasure<FreeWord>::finite(atoms, std::vector<double>(6, 1.0), rho);
}

namespace {

nlohmann::json parse_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

SchottkyMeasure<Mat> matrix_measure_from_json(const std::string& text, double rho) {
  auto j = parse_json(text);
  if (!j.is_array()) throw InputError("measure JSON must be an array");
  std::vector<Mat> atoms;
  std::vector<double> w;
  try {
    for (const auto& e : j) {
      auto v = e.at("element").get<std::vector<double>>();
      int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(v.size()))));
      if (d * d != static_cast<int>(v.size()) || d < 1)
        throw InputError("matrix element must be a square row-major array");
      atoms.emplace_back(d, d, v);
      w.push_back(e.at("weight").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad measure entry: ") + e.what());
  }
  return SchottkyMeasure<Mat>::finite(atoms, w, rho);
}

SchottkyMeasure<FreeWord> word_measure_from_json(const std::string& text, double rho) {
  auto j = parse_json(text);
  if (!j.is_array()) throw InputError("measure JSON must be an array");
  std::vector<FreeWord> atoms;
  std::vector<double> w;
  try {
    for (const auto& e : j) {
      atoms.push_back(FreeWord::parse(e.at("element").get<std::string>()));
      w.push_back(e.at("weight").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad measure entry: ") + e.what());
  }
  return SchottkyMeasure<FreeWord>::finite(atoms, w, rho);
}

std::string matrix_measure_to_json(const SchottkyMeasure<Mat>& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (size_t i = 0; i < m.atoms().size(); ++i)
    arr.push_back({{"element", m.atoms()[i].entries()}, {"weight", m.weights()[i]}});
  return arr.dump();
}

}  // namespace pivotal
