/*
 * Copyright 2026 The clipbias Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Counter-based randomness. Every variate is a pure function of
// (master_seed, stream_id, draw_index, position within the draw), so Monte
// Carlo loops give identical results however they are partitioned.
//
// Generator: Philox4x64-10 (Salmon et al., SC'11), keyed by
// (master_seed, stream_id) with counter (draw_index, block, 0, 0).
// Uniforms take the top 53 bits of each 64-bit word. Normals use the
// Box-Muller transform on consecutive uniform pairs, returning the cosine
// branch first and the sine branch on the next call.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace clipbias {

namespace detail {

inline void mulhilo64(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                      std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

using PhiloxBlock = std::array<std::uint64_t, 4>;
using PhiloxKey = std::array<std::uint64_t, 2>;

inline PhiloxBlock philox4x64_10(PhiloxBlock ctr, PhiloxKey key) {
  constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
  constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
  constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
  constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    detail::mulhilo64(kM0, ctr[0], hi0, lo0);
    detail::mulhilo64(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

struct SeededStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  // Independent sub-stream, e.g. one per role (batch indices, privacy
  // noise, ...) or per table cell.
  SeededStream child(std::uint64_t tag) const {
    return {master_seed,
            detail::splitmix64(stream_id ^ detail::splitmix64(tag + 0x5851F42D4C957F2DULL))};
  }

  friend bool operator==(const SeededStream&, const SeededStream&) = default;
};

// Sequential reader over the variates belonging to one draw.
class DrawCursor {
 public:
  DrawCursor(const SeededStream& stream, std::uint64_t draw_index)
      : key_{stream.master_seed, stream.stream_id}, draw_(draw_index) {}

  std::uint64_t next_u64() {
    if (pos_ == 4) {
      buf_ = philox4x64_10({draw_, block_++, 0, 0}, key_);
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  // Uniform on [0, 1).
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::uint64_t next_index(std::uint64_t n) {
    const auto i = static_cast<std::uint64_t>(next_uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - next_uniform();  // (0, 1]
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  PhiloxKey key_;
  std::uint64_t draw_;
  std::uint64_t block_ = 0;
  PhiloxBlock buf_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace clipbias
