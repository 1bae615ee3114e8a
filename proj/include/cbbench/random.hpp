// Copyright 2026 The cbbench Authors.
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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cbbench {

namespace detail {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;
inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// SplitMix64 output finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Incremental 64-bit hash: FNV-1a over the byte stream, finalized with the
/// SplitMix64 mixer. Integers are absorbed little-endian so digests do not
/// depend on host byte order.
class Hash64 {
 public:
  Hash64& bytes(std::string_view data) noexcept {
    for (unsigned char c : data) {
      state_ ^= c;
      state_ *= detail::kFnvPrime;
    }
    return *this;
  }

  Hash64& u64(std::uint64_t v) noexcept {
    for (int i = 0; i < 8; ++i) {
      state_ ^= (v >> (8 * i)) & 0xffU;
      state_ *= detail::kFnvPrime;
    }
    return *this;
  }

  // Length-prefixed field, so ("ab","c") and ("a","bc") hash differently.
  Hash64& field(std::string_view data) noexcept {
    return u64(data.size()).bytes(data);
  }

  std::uint64_t digest() const noexcept { return detail::mix64(state_); }

 private:
  std::uint64_t state_ = detail::kFnvOffset;
};

inline std::uint64_t hash64(std::string_view data) noexcept {
  return Hash64{}.bytes(data).digest();
}

/// Counter-based deterministic generator. Word i of the stream is
/// mix64(key + i * golden_gamma) where key = hash64(seed || label), which is
/// SplitMix64 started at a label-dependent point. Streams are reproducible
/// bit-for-bit on any platform. Satisfies UniformRandomBitGenerator, but
/// prefer the member helpers over <random> distributions: those are
/// implementation-defined and would break cross-platform replay.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::string_view label)
      : origin_seed_(seed),
        label_(label),
        key_(Hash64{}.u64(seed).field(label).digest()) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGoldenGamma);
  }

  /// Uniform real in [0, 1) with 53 random bits.
  double uniform01() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform01();
  }

  bool coin() noexcept { return (next_u64() >> 63) != 0; }

  /// Unbiased integer in [0, n) by rejection sampling.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  /// Standard normal draw (Marsaglia polar method; pairs are cached).
  double gaussian() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  std::uint64_t origin_seed() const noexcept { return origin_seed_; }
  const std::string& label() const noexcept { return label_; }

  friend bool operator==(const RandomStream&, const RandomStream&) = default;

 private:
  std::uint64_t origin_seed_;
  std::string label_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline RandomStream derive_stream(std::uint64_t seed, std::string_view label) {
  return RandomStream(seed, label);
}

/// First `count` entries of a uniformly random permutation of 0..n-1
/// (forward Fisher-Yates, so a prefix of the full shuffle).
inline std::vector<std::uint32_t> random_permutation_prefix(RandomStream& stream,
                                                            std::size_t n,
                                                            std::size_t count) {
  if (count > n) throw std::invalid_argument("permutation prefix longer than n");
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0U);
  for (std::size_t i = 0; i < count && i + 1 < n; ++i) {
    const std::size_t j = i + stream.uniform_index(n - i);
    std::swap(perm[i], perm[j]);
  }
  perm.resize(count);
  return perm;
}

inline std::vector<std::uint32_t> random_permutation(RandomStream& stream,
                                                     std::size_t n) {
  return random_permutation_prefix(stream, n, n);
}

}  // namespace cbbench
