// Copyright 2026 The lastiter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Counter-based random streams (Philox4x32-10). Every (seed, arm, trial)
// triple owns an independent stream, so simulation fan-out across any number
// of workers reproduces bit-identical draws.

#ifndef LASTITER_RNG_HPP_
#define LASTITER_RNG_HPP_

#include <array>
#include <cmath>
#include <cstdint>

namespace lastiter {

// One 4x32 Philox block with 10 rounds.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

// Sequential view of the (seed, arm, trial) stream. Uniforms come from
// 53-bit mantissas of successive blocks; normals from the Box-Muller
// transform of one block's two uniforms, so draw i of a stream never depends
// on how earlier draws were consumed elsewhere.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint32_t arm, std::uint64_t trial)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        base_{0, arm, static_cast<std::uint32_t>(trial),
              static_cast<std::uint32_t>(trial >> 32)} {}

  // Uniform on [0, 1).
  double uniform() {
    const auto [a, b] = next_pair();
    return to_unit(a, b);
  }

  // Standard normal via Box-Muller; pairs are cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const auto [a, b] = next_pair();
    const auto [c, d] = next_pair();
    const double u1 = to_unit_positive(a, b);
    const double u2 = to_unit(c, d);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(angle);
    have_cached_ = true;
    return r * std::cos(angle);
  }

 private:
  std::pair<std::uint32_t, std::uint32_t> next_pair() {
    if (word_ == 0) {
      auto ctr = base_;
      ctr[0] = block_++;
      words_ = philox4x32(ctr, key_);
    }
    const std::uint32_t a = words_[word_];
    const std::uint32_t b = words_[word_ + 1];
    word_ = (word_ + 2) % 4;
    return {a, b};
  }

  static double to_unit(std::uint32_t a, std::uint32_t b) {
    const std::uint64_t bits =
        (static_cast<std::uint64_t>(a) << 32 | b) >> 11;  // 53 bits
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  static double to_unit_positive(std::uint32_t a, std::uint32_t b) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(a) << 32 | b) >> 11;
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;  // (0, 1]
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> base_;
  std::array<std::uint32_t, 4> words_{};
  std::uint32_t block_ = 0;
  int word_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace lastiter

#endif  // LASTITER_RNG_HPP_
