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

// Keyed cancelable-biometric transforms and their comparators.
//
// Every transform is a pure function of (SchemeKey, input dimension): all
// random material is drawn from streams derived from the key seed with a
// scheme-specific label, so re-instantiating a key reproduces the transform
// exactly.
//
//   BioHash   sign of projections onto orthonormalized Gaussian directions
//   MLP-Hash  stack of orthonormalized random layers with a leaky ramp,
//             thresholded at zero
//   Bloom     sign-binarized template, column words XOR-masked and inserted
//             into per-block filters of 2^w bits
//   IoM-GRP   index of the largest of k Gaussian projections, per hash
//   IoM-URP   index of the largest of the first k entries of a Hadamard
//             product of p permuted copies, per hash
//   Rand-Hash permutation, scale and sign flip, then sign binarization;
//             outputs longer than d use further independently keyed blocks

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cbbench/core.hpp"
#include "cbbench/linalg.hpp"
#include "cbbench/random.hpp"

namespace cbbench::schemes {

inline constexpr double kLeakySlope = 0.01;

struct BioHashState {
  Matrix projection;  // L x d
  friend bool operator==(const BioHashState& a, const BioHashState& b) {
    return same_matrix(a.projection, b.projection);
  }
};

struct MlpHashState {
  std::vector<Matrix> layers;  // first L x d, then L x L
  friend bool operator==(const MlpHashState& a, const MlpHashState& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i)
      if (!same_matrix(a.layers[i], b.layers[i])) return false;
    return true;
  }
};

struct BloomState {
  std::size_t word_bits = 0;
  std::size_t block_cols = 0;
  std::size_t blocks = 0;
  std::vector<std::uint32_t> masks;  // one per column, blocks * block_cols
  friend bool operator==(const BloomState&, const BloomState&) = default;
};

struct IomGrpState {
  std::size_t hashes = 0;
  std::size_t k = 0;
  Matrix directions;  // (hashes * k) x d; rows [h*k, h*k+k) belong to hash h
  friend bool operator==(const IomGrpState& a, const IomGrpState& b) {
    return a.hashes == b.hashes && a.k == b.k && same_matrix(a.directions, b.directions);
  }
};

struct IomUrpState {
  std::size_t hashes = 0;
  std::size_t k = 0;
  std::size_t p = 0;
  // Leading k entries of each permutation, laid out [hash][perm][entry].
  std::vector<std::uint32_t> indices;
  friend bool operator==(const IomUrpState&, const IomUrpState&) = default;
};

struct RandHashBlock {
  std::vector<std::uint32_t> permutation;  // y_i = z_{permutation[i]}
  std::vector<double> scales;
  std::vector<double> signs;  // +1 / -1
  friend bool operator==(const RandHashBlock&, const RandHashBlock&) = default;
};

struct RandHashState {
  std::size_t length = 0;
  // ceil(L/d) independently keyed blocks; output bit i comes from block i/d.
  std::vector<RandHashBlock> blocks;
  friend bool operator==(const RandHashState&, const RandHashState&) = default;
};

class TransformInstance;
inline TransformInstance instantiate(const SchemeKey& key, std::size_t dim);

/// Materialized transform for one key and input dimension. Immutable; safe
/// to share across threads.
class TransformInstance {
 public:
  using State = std::variant<BioHashState, MlpHashState, BloomState, IomGrpState,
                             IomUrpState, RandHashState>;

  const SchemeKey& key() const noexcept { return key_; }
  SchemeId scheme() const noexcept { return key_.scheme; }
  std::size_t dimension() const noexcept { return dim_; }
  const State& state() const noexcept { return state_; }

  /// Protected template for a feature vector of this instance's dimension.
  ProtectedTemplate protect(std::span<const double> x) const;

  friend bool operator==(const TransformInstance& a, const TransformInstance& b) {
    return a.key_ == b.key_ && a.dim_ == b.dim_ && a.state_ == b.state_;
  }

 private:
  TransformInstance(SchemeKey key, std::size_t dim, State state)
      : key_(std::move(key)), dim_(dim), state_(std::move(state)) {}

  friend TransformInstance instantiate(const SchemeKey& key, std::size_t dim);
  // Test-only access to the materialized parameters; defined by the tests.
  friend struct TransformInstanceAccess;

  SchemeKey key_;
  std::size_t dim_;
  State state_;
};

namespace detail {

inline std::string label(SchemeId id, std::string_view part) {
  return "cbbench/" + std::string(to_string(id)) + "/" + std::string(part);
}

// L rows over d columns: ceil(L/d) independent blocks of min(L, d) rows,
// each orthonormalized on its own, concatenated and cut to L rows.
inline Matrix orthonormal_blocks(RandomStream& stream, std::size_t rows, std::size_t cols) {
  const auto block_rows = static_cast<Index>(std::min(rows, cols));
  Matrix out(static_cast<Index>(rows), static_cast<Index>(cols));
  Index filled = 0;
  while (filled < out.rows()) {
    const Matrix block = gram_schmidt(gaussian_matrix(stream, block_rows, out.cols()));
    const Index take = std::min(block_rows, out.rows() - filled);
    out.middleRows(filled, take) = block.topRows(take);
    filled += take;
  }
  return out;
}

inline double leaky_ramp(double z) { return z > 0.0 ? z : kLeakySlope * z; }

inline Eigen::Map<const Vector> as_vector(std::span<const double> x) {
  return {x.data(), static_cast<Index>(x.size())};
}

inline BitString sign_bits(const Vector& y) {
  BitString out{BitVector(static_cast<std::size_t>(y.size()))};
  for (Index i = 0; i < y.size(); ++i)
    if (y(i) > 0.0) out.bits.set(static_cast<std::size_t>(i));
  return out;
}

// Index of the largest entry; ties go to the lowest index.
template <typename Values>
std::uint32_t argmax(const Values& v, std::size_t n) {
  std::uint32_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (v[i] > v[best]) best = static_cast<std::uint32_t>(i);
  return best;
}

inline BioHashState make_biohash(const SchemeKey& key, std::size_t d) {
  RandomStream stream = derive_stream(key.seed, label(key.scheme, "projection"));
  return {orthonormal_blocks(stream, key.params.length, d)};
}

inline MlpHashState make_mlphash(const SchemeKey& key, std::size_t d) {
  MlpHashState state;
  std::size_t in = d;
  for (std::size_t layer = 0; layer < key.params.mlp_layers; ++layer) {
    RandomStream stream =
        derive_stream(key.seed, label(key.scheme, "layer/" + std::to_string(layer)));
    state.layers.push_back(orthonormal_blocks(stream, key.params.length, in));
    in = key.params.length;
  }
  return state;
}

inline BloomState make_bloom(const SchemeKey& key, std::size_t d) {
  BloomState state;
  state.word_bits = key.params.bloom_word_bits;
  state.block_cols = key.params.bloom_block_cols;
  const std::size_t per_block = state.word_bits * state.block_cols;
  state.blocks = (d + per_block - 1) / per_block;
  RandomStream stream = derive_stream(key.seed, label(key.scheme, "masks"));
  const std::uint64_t range = std::uint64_t{1} << state.word_bits;
  state.masks.resize(state.blocks * state.block_cols);
  for (auto& m : state.masks) m = static_cast<std::uint32_t>(stream.uniform_index(range));
  return state;
}

inline IomGrpState make_iom_grp(const SchemeKey& key, std::size_t d) {
  RandomStream stream = derive_stream(key.seed, label(key.scheme, "directions"));
  IomGrpState state;
  state.hashes = key.params.length;
  state.k = key.params.iom_k;
  state.directions = gaussian_matrix(stream, static_cast<Index>(state.hashes * state.k),
                                     static_cast<Index>(d));
  return state;
}

inline IomUrpState make_iom_urp(const SchemeKey& key, std::size_t d) {
  if (key.params.iom_k > d) {
    throw std::invalid_argument("iom-urp: iom_k=" + std::to_string(key.params.iom_k) +
                                " exceeds template dimension " + std::to_string(d));
  }
  RandomStream stream = derive_stream(key.seed, label(key.scheme, "permutations"));
  IomUrpState state;
  state.hashes = key.params.length;
  state.k = key.params.iom_k;
  state.p = key.params.iom_p;
  state.indices.reserve(state.hashes * state.p * state.k);
  for (std::size_t h = 0; h < state.hashes * state.p; ++h) {
    const auto prefix = random_permutation_prefix(stream, d, state.k);
    state.indices.insert(state.indices.end(), prefix.begin(), prefix.end());
  }
  return state;
}

inline RandHashState make_randhash(const SchemeKey& key, std::size_t d) {
  RandHashState state;
  state.length = key.params.length;
  const std::size_t count = (state.length + d - 1) / d;
  for (std::size_t b = 0; b < count; ++b) {
    const std::string suffix = "/" + std::to_string(b);
    RandHashBlock block;
    RandomStream perm_stream = derive_stream(key.seed, label(key.scheme, "permutation" + suffix));
    block.permutation = random_permutation(perm_stream, d);
    RandomStream scale_stream = derive_stream(key.seed, label(key.scheme, "scales" + suffix));
    block.scales.resize(d);
    for (auto& v : block.scales) v = std::exp(scale_stream.uniform(std::log(0.5), std::log(2.0)));
    RandomStream sign_stream = derive_stream(key.seed, label(key.scheme, "signs" + suffix));
    block.signs.resize(d);
    for (auto& v : block.signs) v = sign_stream.coin() ? 1.0 : -1.0;
    state.blocks.push_back(std::move(block));
  }
  return state;
}

// -- evaluation --------------------------------------------------------------

inline BitString eval(const BioHashState& s, std::span<const double> x) {
  return sign_bits(s.projection * as_vector(x));
}

inline BitString eval(const MlpHashState& s, std::span<const double> x) {
  Vector h = as_vector(x);
  for (const Matrix& w : s.layers) {
    const Vector pre = w * h;
    h = pre.unaryExpr(&leaky_ramp);
  }
  return sign_bits(h);
}

inline BloomSet eval(const BloomState& s, std::span<const double> x) {
  const std::size_t per_block = s.word_bits * s.block_cols;
  BloomSet out;
  out.blocks.assign(s.blocks, BitVector(std::size_t{1} << s.word_bits));
  for (std::size_t b = 0; b < s.blocks; ++b) {
    for (std::size_t c = 0; c < s.block_cols; ++c) {
      std::uint32_t word = 0;
      for (std::size_t j = 0; j < s.word_bits; ++j) {
        const std::size_t pos = b * per_block + c * s.word_bits + j;
        const bool bit = pos < x.size() && x[pos] > 0.0;  // zero padding past d
        word = (word << 1) | static_cast<std::uint32_t>(bit);
      }
      out.blocks[b].set(word ^ s.masks[b * s.block_cols + c]);
    }
  }
  return out;
}

inline CodeVector eval(const IomGrpState& s, std::span<const double> x) {
  const Vector proj = s.directions * as_vector(x);
  CodeVector out{std::vector<std::uint32_t>(s.hashes), static_cast<std::uint32_t>(s.k)};
  for (std::size_t h = 0; h < s.hashes; ++h)
    out.codes[h] = argmax(proj.segment(static_cast<Index>(h * s.k), static_cast<Index>(s.k)), s.k);
  return out;
}

inline CodeVector eval(const IomUrpState& s, std::span<const double> x) {
  CodeVector out{std::vector<std::uint32_t>(s.hashes), static_cast<std::uint32_t>(s.k)};
  std::vector<double> prod(s.k);
  for (std::size_t h = 0; h < s.hashes; ++h) {
    const std::uint32_t* base = s.indices.data() + h * s.p * s.k;
    for (std::size_t i = 0; i < s.k; ++i) {
      double v = 1.0;
      for (std::size_t j = 0; j < s.p; ++j) v *= x[base[j * s.k + i]];
      prod[i] = v;
    }
    out.codes[h] = argmax(prod, s.k);
  }
  return out;
}

inline BitString eval(const RandHashState& s, std::span<const double> x) {
  const std::size_t d = x.size();
  BitString out{BitVector(s.length)};
  for (std::size_t i = 0; i < s.length; ++i) {
    const RandHashBlock& block = s.blocks[i / d];
    const std::uint32_t src = block.permutation[i % d];
    if (block.scales[src] * block.signs[src] * x[src] > 0.0) out.bits.set(i);
  }
  return out;
}

}  // namespace detail

inline TransformInstance instantiate(const SchemeKey& key, std::size_t dim) {
  if (dim < 2)
    throw std::invalid_argument("instantiate: template dimension must be >= 2");
  key.params.validate();
  TransformInstance::State state = [&]() -> TransformInstance::State {
    switch (key.scheme) {
      case SchemeId::BioHash: return detail::make_biohash(key, dim);
      case SchemeId::MlpHash: return detail::make_mlphash(key, dim);
      case SchemeId::BloomFilter: return detail::make_bloom(key, dim);
      case SchemeId::IomGrp: return detail::make_iom_grp(key, dim);
      case SchemeId::IomUrp: return detail::make_iom_urp(key, dim);
      case SchemeId::RandHash: return detail::make_randhash(key, dim);
    }
    throw std::invalid_argument("instantiate: unknown scheme");
  }();
  return TransformInstance(key, dim, std::move(state));
}

inline ProtectedTemplate TransformInstance::protect(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw std::invalid_argument("protect: template has " + std::to_string(x.size()) +
                                " features, transform expects " + std::to_string(dim_));
  }
  return std::visit(
      [&](const auto& s) { return ProtectedTemplate(key_.scheme, detail::eval(s, x)); },
      state_);
}

inline ProtectedTemplate protect(const Template& t, const TransformInstance& inst) {
  return inst.protect(t.features);
}

namespace detail {
inline ProtectedTemplate protect_as(SchemeId expected, const Template& t,
                                    const TransformInstance& inst) {
  if (inst.scheme() != expected) {
    throw std::invalid_argument("transform instance is " + std::string(to_string(inst.scheme())) +
                                ", expected " + std::string(to_string(expected)));
  }
  return inst.protect(t.features);
}
}  // namespace detail

inline ProtectedTemplate biohash_protect(const Template& t, const TransformInstance& inst) {
  return detail::protect_as(SchemeId::BioHash, t, inst);
}
inline ProtectedTemplate mlphash_protect(const Template& t, const TransformInstance& inst) {
  return detail::protect_as(SchemeId::MlpHash, t, inst);
}
inline ProtectedTemplate bloom_protect(const Template& t, const TransformInstance& inst) {
  return detail::protect_as(SchemeId::BloomFilter, t, inst);
}
inline ProtectedTemplate iom_grp_protect(const Template& t, const TransformInstance& inst) {
  return detail::protect_as(SchemeId::IomGrp, t, inst);
}
inline ProtectedTemplate iom_urp_protect(const Template& t, const TransformInstance& inst) {
  return detail::protect_as(SchemeId::IomUrp, t, inst);
}
inline ProtectedTemplate randhash_protect(const Template& t, const TransformInstance& inst) {
  return detail::protect_as(SchemeId::RandHash, t, inst);
}

/// Similarity of two protected templates from the same scheme:
///   bit strings   1 - hamming / L
///   code vectors  fraction of equal codes
///   Bloom sets    1 - mean over blocks of |A xor B| / (|A| + |B|)
inline Score compare(const ProtectedTemplate& a, const ProtectedTemplate& b) {
  if (a.scheme() != b.scheme()) {
    throw std::invalid_argument("compare: scheme mismatch (" +
                                std::string(to_string(a.scheme())) + " vs " +
                                std::string(to_string(b.scheme())) + ")");
  }
  const Payload& pa = a.payload();
  const Payload& pb = b.payload();
  if (const auto* x = std::get_if<BitString>(&pa)) {
    const auto& y = std::get<BitString>(pb);
    if (x->bits.size() != y.bits.size() || x->bits.size() == 0)
      throw std::invalid_argument("compare: bit string length mismatch");
    const double n = static_cast<double>(x->bits.size());
    return Score(1.0 - static_cast<double>(xor_count(x->bits, y.bits)) / n);
  }
  if (const auto* x = std::get_if<CodeVector>(&pa)) {
    const auto& y = std::get<CodeVector>(pb);
    if (x->codes.size() != y.codes.size() || x->alphabet != y.alphabet || x->codes.empty())
      throw std::invalid_argument("compare: code vector shape mismatch");
    std::size_t equal = 0;
    for (std::size_t i = 0; i < x->codes.size(); ++i) equal += x->codes[i] == y.codes[i];
    return Score(static_cast<double>(equal) / static_cast<double>(x->codes.size()));
  }
  const auto& x = std::get<BloomSet>(pa);
  const auto& y = std::get<BloomSet>(pb);
  if (x.blocks.size() != y.blocks.size() || x.blocks.empty())
    throw std::invalid_argument("compare: bloom block count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < x.blocks.size(); ++i) {
    if (x.blocks[i].size() != y.blocks[i].size())
      throw std::invalid_argument("compare: bloom block size mismatch");
    const std::size_t denom = x.blocks[i].count() + y.blocks[i].count();
    if (denom > 0)
      total += static_cast<double>(xor_count(x.blocks[i], y.blocks[i])) /
               static_cast<double>(denom);
  }
  return Score(1.0 - total / static_cast<double>(x.blocks.size()));
}

/// Expected cross-key similarity for unrelated keys, where it is
/// analytically fixed (Bloom depends on filter fill and has none).
inline std::optional<double> chance_level(SchemeId scheme, const SchemeParams& params) {
  switch (scheme) {
    case SchemeId::BioHash:
    case SchemeId::MlpHash:
    case SchemeId::RandHash: return 0.5;
    case SchemeId::IomGrp:
    case SchemeId::IomUrp: return 1.0 / static_cast<double>(params.iom_k);
    case SchemeId::BloomFilter: return std::nullopt;
  }
  return std::nullopt;
}

/// Bits carrying distinct template information (Rand-Hash blocks past the
/// first repeat coordinates already covered).
inline std::size_t effective_bits(SchemeId scheme, const SchemeParams& params, std::size_t dim) {
  switch (scheme) {
    case SchemeId::RandHash: return std::min(params.length, dim);
    case SchemeId::BloomFilter: {
      const std::size_t per_block = params.bloom_word_bits * params.bloom_block_cols;
      return ((dim + per_block - 1) / per_block) * (std::size_t{1} << params.bloom_word_bits);
    }
    case SchemeId::IomGrp:
    case SchemeId::IomUrp:
      return params.length * static_cast<std::size_t>(std::bit_width(params.iom_k - 1));
    default: return params.length;
  }
}

}  // namespace cbbench::schemes
