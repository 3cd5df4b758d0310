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

#include <array>
#include <cstdint>

namespace pivotal {

// Philox4x32-10 block function.
std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr,
                                   std::array<uint32_t, 2> key);

// Stream tags. Every consumer of randomness owns a tag so that streams never
// overlap and results do not depend on evaluation order.
namespace tag {
constexpr uint32_t kLetters = 1;
constexpr uint32_t kTags = 2;
constexpr uint32_t kPenaltyV = 3;
constexpr uint32_t kPenaltyP = 4;
constexpr uint32_t kMass = 5;
constexpr uint32_t kSuite = 6;
constexpr uint32_t kTrajectory = 7;
constexpr uint32_t kBoundary = 8;
constexpr uint32_t kSchottky = 9;
constexpr uint32_t kAdversary = 10;
constexpr uint32_t kBootstrap = 11;
constexpr uint32_t kLeftRight = 12;
constexpr uint32_t kDiagnostics = 13;
constexpr uint32_t kUnknown = 14;
}  // namespace tag

// Counter-based stream keyed by (seed, tag, index). Two streams with distinct
// keys are independent; the same key always yields the same sequence.
class Stream {
 public:
  Stream(uint64_t seed, uint32_t tag, uint64_t index);

  uint32_t next_u32();
  uint64_t next_u64();
  // Uniform on [0,1) with 53 random bits.
  double uniform();
  // Uniform on (0,1).
  double uniform_open();
  double normal();
  // Uniform integer in [0, n).
  uint64_t below(uint64_t n);

 private:
  void refill();

  std::array<uint32_t, 2> key_;
  std::array<uint32_t, 4> ctr_;
  std::array<uint32_t, 4> buf_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Single uniform draw for the given key (penalties, per-item seeds).
double keyed_uniform(uint64_t seed, uint32_t tag, uint64_t index);

// Derive a child seed; used to give sub-experiments their own key space.
uint64_t derive_seed(uint64_t seed, uint64_t salt);

}  // namespace pivotal
