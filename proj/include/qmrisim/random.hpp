/**
 * Copyright 2026 The qmrisim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace qmrisim {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is
/// a pure function of (key, counter), which is what lets voxel loops draw
/// randomness in any order and still reproduce bit-for-bit.
class Philox4x32 {
 public:
  using Counter = std::array<uint32_t, 4>;
  using Key = std::array<uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const uint64_t p0 = uint64_t{kMul0} * ctr[0];
      const uint64_t p1 = uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<uint32_t>(p1),
             static_cast<uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr uint32_t kMul0 = 0xD2511F53u;
  static constexpr uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr uint32_t kWeyl1 = 0xBB67AE85u;
};

/// SplitMix64 finaliser; used for seed derivation, not for sampling.
constexpr uint64_t mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Child seed for (stage, index) under `parent`. Independent of how many
/// other stages or indices exist.
constexpr uint64_t derive_seed(uint64_t parent, std::string_view stage, uint64_t index = 0) {
  return mix64(mix64(parent ^ fnv1a64(stage)) + mix64(index ^ 0x5851F42D4C957F2Dull));
}

/// Sequential draws from the Philox stream identified by (seed, stream,
/// lane). Each voxel gets its own lane, so per-voxel draws never depend on
/// visiting order.
class RandomStream {
 public:
  RandomStream(uint64_t seed, uint32_t stream, uint64_t lane = 0)
      : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
        lane_lo_(static_cast<uint32_t>(lane)),
        lane_hi_(static_cast<uint32_t>(lane >> 32)),
        stream_(stream) {}

  uint64_t next_u64() {
    if (pos_ == 2) refill();
    return buffer_[pos_++];
  }

  /// Uniform on (0, 1), 53-bit resolution; never returns 0 or 1.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  /// Integer uniform on [lo, hi].
  int64_t uniform_int(int64_t lo, int64_t hi) {
    const auto span = static_cast<uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<int64_t>(next_u64());
    // Lemire-style rejection keeps the distribution exact.
    const uint64_t limit = (~uint64_t{0} / span) * span;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return lo + static_cast<int64_t>(x % span);
  }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

 private:
  void refill() {
    const auto out = Philox4x32::generate({lane_lo_, lane_hi_, block_++, stream_}, key_);
    buffer_[0] = (uint64_t{out[0]} << 32) | out[1];
    buffer_[1] = (uint64_t{out[2]} << 32) | out[3];
    pos_ = 0;
  }

  Philox4x32::Key key_;
  uint32_t lane_lo_, lane_hi_, stream_;
  uint32_t block_ = 0;
  std::array<uint64_t, 2> buffer_{};
  int pos_ = 2;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// 32-bit stream id for a named purpose ("gmm", "rician", ...).
constexpr uint32_t stream_id(std::string_view name) {
  const uint64_t h = fnv1a64(name);
  return static_cast<uint32_t>(h ^ (h >> 32));
}

}  // namespace qmrisim
