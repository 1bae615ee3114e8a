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

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cbbench/random.hpp"
#include "cbbench/schemes.hpp"
#include "oracles.hpp"

namespace cbbench::schemes {
namespace {

using Access = TransformInstanceAccess;

SchemeKey key_for(SchemeId id, std::uint64_t seed = 1, SchemeParams params = {}) {
  return SchemeKey{seed, id, params};
}

std::vector<double> random_features(std::uint64_t seed, std::size_t d) {
  RandomStream s = derive_stream(seed, "features");
  std::vector<double> x(d);
  for (double& v : x) v = s.gaussian();
  return x;
}

std::vector<bool> bits_of(const ProtectedTemplate& t) {
  const auto& b = std::get<BitString>(t.payload()).bits;
  std::vector<bool> out;
  for (std::size_t i = 0; i < b.size(); ++i) out.push_back(b.test(i));
  return out;
}

std::vector<std::uint32_t> codes_of(const ProtectedTemplate& t) {
  return std::get<CodeVector>(t.payload()).codes;
}

TEST(Instantiate, SameKeySameInstance) {
  for (SchemeId id : kAllSchemes)
    EXPECT_EQ(instantiate(key_for(id), 32), instantiate(key_for(id), 32)) << to_string(id);
}

TEST(Instantiate, DifferentSeedsDiffer) {
  for (SchemeId id : kAllSchemes)
    EXPECT_FALSE(instantiate(key_for(id, 1), 32) == instantiate(key_for(id, 2), 32))
        << to_string(id);
  const auto a = instantiate(key_for(SchemeId::BioHash, 1), 16);
  const auto b = instantiate(key_for(SchemeId::BioHash, 2), 16);
  EXPECT_FALSE(same_matrix(std::get<BioHashState>(a.state()).projection,
                           std::get<BioHashState>(b.state()).projection));
}

TEST(Instantiate, Preconditions) {
  EXPECT_THROW(instantiate(key_for(SchemeId::BioHash), 1), std::invalid_argument);
  SchemeParams p;
  p.iom_k = 40;
  EXPECT_THROW(instantiate(key_for(SchemeId::IomUrp, 1, p), 32), std::invalid_argument);
  p = {};
  p.length = 4;
  EXPECT_THROW(instantiate(key_for(SchemeId::RandHash, 1, p), 32), std::invalid_argument);
}

TEST(BioHash, ProjectionRowsOrthonormalPerBlock) {
  const auto inst = instantiate(key_for(SchemeId::BioHash), 64);
  const Matrix& p = std::get<BioHashState>(inst.state()).projection;
  ASSERT_EQ(p.rows(), 256);
  ASSERT_EQ(p.cols(), 64);
  for (Index b = 0; b < 4; ++b) {
    const Matrix g = p.middleRows(b * 64, 64) * p.middleRows(b * 64, 64).transpose();
    EXPECT_TRUE(g.isApprox(Matrix::Identity(64, 64), 1e-10));
  }
}

TEST(BioHash, IdentityProjectionByHand) {
  auto inst = instantiate(key_for(SchemeId::BioHash), 2);
  std::get<BioHashState>(Access::state(inst)).projection = Matrix::Identity(2, 2);
  EXPECT_EQ(bits_of(inst.protect(std::vector<double>{1.0, 0.0})), (std::vector<bool>{true, false}));
}

TEST(BioHash, ZeroInputGivesZeroBits) {
  const auto inst = instantiate(key_for(SchemeId::BioHash), 16);
  const auto t = inst.protect(std::vector<double>(16, 0.0));
  EXPECT_EQ(std::get<BitString>(t.payload()).bits.count(), 0u);
  EXPECT_EQ(t.element_count(), 256u);
}

TEST(MlpHash, IdentityLayerByHand) {
  SchemeParams p;
  p.mlp_layers = 1;
  auto inst = instantiate(key_for(SchemeId::MlpHash, 1, p), 2);
  auto& st = std::get<MlpHashState>(Access::state(inst));
  ASSERT_EQ(st.layers.size(), 1u);
  st.layers[0] = Matrix::Identity(2, 2);
  EXPECT_EQ(bits_of(inst.protect(std::vector<double>{2.0, -1.0})), (std::vector<bool>{true, false}));
}

TEST(MlpHash, LayerShapes) {
  SchemeParams p;
  p.mlp_layers = 3;
  p.length = 40;
  const auto inst = instantiate(key_for(SchemeId::MlpHash, 1, p), 16);
  const auto& layers = std::get<MlpHashState>(inst.state()).layers;
  ASSERT_EQ(layers.size(), 3u);
  EXPECT_EQ(layers[0].rows(), 40);
  EXPECT_EQ(layers[0].cols(), 16);
  EXPECT_EQ(layers[2].cols(), 40);
}

BloomState hand_bloom() {
  BloomState st;
  st.word_bits = 2;
  st.block_cols = 2;
  st.blocks = 1;
  st.masks = {0, 0};
  return st;
}

TEST(Bloom, ColumnWordsByHand) {
  auto inst = instantiate(key_for(SchemeId::BloomFilter), 4);
  Access::state(inst) = hand_bloom();
  // Columns (1,0) -> 2 and (1,1) -> 3.
  const auto t = inst.protect(std::vector<double>{1.0, -1.0, 1.0, 1.0});
  const auto& blocks = std::get<BloomSet>(t.payload()).blocks;
  ASSERT_EQ(blocks.size(), 1u);
  ASSERT_EQ(blocks[0].size(), 4u);
  EXPECT_FALSE(blocks[0].test(0));
  EXPECT_FALSE(blocks[0].test(1));
  EXPECT_TRUE(blocks[0].test(2));
  EXPECT_TRUE(blocks[0].test(3));
}

TEST(Bloom, DuplicateColumnsAreIdempotent) {
  auto inst = instantiate(key_for(SchemeId::BloomFilter), 4);
  Access::state(inst) = hand_bloom();
  const auto t = inst.protect(std::vector<double>{1.0, 1.0, 1.0, 1.0});
  EXPECT_EQ(std::get<BloomSet>(t.payload()).blocks[0].count(), 1u);
}

TEST(Bloom, MaskPermutesWords) {
  auto inst = instantiate(key_for(SchemeId::BloomFilter), 4);
  BloomState st = hand_bloom();
  st.masks = {1, 3};
  Access::state(inst) = st;
  // 2^1 = 3, 3^3 = 0.
  const auto t = inst.protect(std::vector<double>{1.0, -1.0, 1.0, 1.0});
  const auto& block = std::get<BloomSet>(t.payload()).blocks[0];
  EXPECT_TRUE(block.test(3));
  EXPECT_TRUE(block.test(0));
  EXPECT_EQ(block.count(), 2u);
}

TEST(Bloom, DefaultShape) {
  const auto inst = instantiate(key_for(SchemeId::BloomFilter), 128);
  const auto t = inst.protect(random_features(3, 128));
  const auto& blocks = std::get<BloomSet>(t.payload()).blocks;
  EXPECT_EQ(blocks.size(), 2u);  // 128 / (4 * 16)
  EXPECT_EQ(blocks[0].size(), 16u);
  EXPECT_EQ(t.bit_length(), effective_bits(SchemeId::BloomFilter, {}, 128));
}

TEST(IomGrp, UnitDirectionsByHand) {
  SchemeParams p;
  p.iom_k = 2;
  auto inst = instantiate(key_for(SchemeId::IomGrp, 1, p), 2);
  auto& st = std::get<IomGrpState>(Access::state(inst));
  st.hashes = 1;
  st.directions = Matrix::Identity(2, 2);
  EXPECT_EQ(codes_of(inst.protect(std::vector<double>{2.0, 1.0})), (std::vector<std::uint32_t>{0}));
}

TEST(IomGrp, TiesGoToLowestIndex) {
  SchemeParams p;
  p.iom_k = 2;
  auto inst = instantiate(key_for(SchemeId::IomGrp, 1, p), 2);
  auto& st = std::get<IomGrpState>(Access::state(inst));
  st.hashes = 1;
  st.directions = Matrix::Identity(2, 2);
  EXPECT_EQ(codes_of(inst.protect(std::vector<double>{1.0, 1.0})), (std::vector<std::uint32_t>{0}));
}

TEST(IomUrp, IdentityPermutationByHand) {
  SchemeParams p;
  p.iom_k = 3;
  p.iom_p = 1;
  auto inst = instantiate(key_for(SchemeId::IomUrp, 1, p), 5);
  auto& st = std::get<IomUrpState>(Access::state(inst));
  st.hashes = 1;
  st.indices = {0, 1, 2};
  EXPECT_EQ(codes_of(inst.protect(std::vector<double>{0.1, 0.9, 0.5, 3.0, 4.0})),
            (std::vector<std::uint32_t>{1}));
}

TEST(IomUrp, IndicesAreDistinctWithinPermutation) {
  const auto inst = instantiate(key_for(SchemeId::IomUrp), 32);
  const auto& st = std::get<IomUrpState>(inst.state());
  ASSERT_EQ(st.indices.size(), st.hashes * st.p * st.k);
  for (std::size_t perm = 0; perm < st.hashes * st.p; ++perm) {
    std::vector<std::uint32_t> v(st.indices.begin() + long(perm * st.k),
                                 st.indices.begin() + long((perm + 1) * st.k));
    std::sort(v.begin(), v.end());
    EXPECT_EQ(std::adjacent_find(v.begin(), v.end()), v.end());
    EXPECT_LT(v.back(), 32u);
  }
}

TEST(RandHash, HandExample) {
  SchemeParams p;
  p.length = 8;
  auto inst = instantiate(key_for(SchemeId::RandHash, 1, p), 2);
  RandHashState st;
  st.length = 2;
  st.blocks.push_back({{0, 1}, {1.0, 2.0}, {1.0, -1.0}});
  Access::state(inst) = st;
  // y = (1*1*3, 2*(-1)*(-1)) = (3, 2).
  EXPECT_EQ(bits_of(inst.protect(std::vector<double>{3.0, -1.0})), (std::vector<bool>{true, true}));
}

TEST(RandHash, LengthAndBlocks) {
  const auto inst = instantiate(key_for(SchemeId::RandHash), 100);
  const auto& st = std::get<RandHashState>(inst.state());
  EXPECT_EQ(st.blocks.size(), 3u);  // ceil(256 / 100)
  for (const auto& b : st.blocks) {
    std::vector<std::uint32_t> perm = b.permutation;
    std::sort(perm.begin(), perm.end());
    for (std::uint32_t i = 0; i < 100; ++i) ASSERT_EQ(perm[i], i);
    for (double s : b.scales) {
      EXPECT_GE(s, 0.5);
      EXPECT_LE(s, 2.0);
    }
  }
  EXPECT_FALSE(st.blocks[0] == st.blocks[1]);
  EXPECT_EQ(inst.protect(random_features(1, 100)).element_count(), 256u);
  EXPECT_EQ(effective_bits(SchemeId::RandHash, {}, 100), 100u);
}

TEST(Protect, OutputShapes) {
  for (SchemeId id : kAllSchemes) {
    const auto t = instantiate(key_for(id), 64).protect(random_features(2, 64));
    if (std::holds_alternative<BitString>(t.payload())) {
      EXPECT_EQ(t.element_count(), 256u);
    }
    if (const auto* cv = std::get_if<CodeVector>(&t.payload())) {
      EXPECT_EQ(cv->codes.size(), 256u);
      for (auto c : cv->codes) EXPECT_LT(c, 16u);
    }
  }
}

TEST(Protect, DimensionChecked) {
  const auto inst = instantiate(key_for(SchemeId::BioHash), 8);
  EXPECT_THROW(inst.protect(std::vector<double>(9, 1.0)), std::invalid_argument);
}

TEST(Protect, SchemeSpecificEntryPointsCheckScheme) {
  const auto inst = instantiate(key_for(SchemeId::IomGrp), 8);
  const Template t{"s", "0", random_features(4, 8)};
  EXPECT_NO_THROW(iom_grp_protect(t, inst));
  EXPECT_THROW(biohash_protect(t, inst), std::invalid_argument);
  EXPECT_THROW(bloom_protect(t, inst), std::invalid_argument);
  EXPECT_EQ(protect(t, inst), iom_grp_protect(t, inst));
}

TEST(Protect, PositiveScaleInvariance) {
  for (SchemeId id : kAllSchemes) {
    const auto inst = instantiate(key_for(id, 9), 48);
    for (int trial = 0; trial < 5; ++trial) {
      const auto x = random_features(100 + trial, 48);
      const auto base = inst.protect(x);
      for (double c : {0.5, 3.0, 100.0}) {
        std::vector<double> y = x;
        for (double& v : y) v *= c;
        EXPECT_EQ(inst.protect(y), base) << to_string(id) << " c=" << c;
      }
    }
  }
}

TEST(Protect, Replay) {
  for (SchemeId id : kAllSchemes) {
    const auto x = random_features(5, 32);
    EXPECT_EQ(instantiate(key_for(id, 77), 32).protect(x), instantiate(key_for(id, 77), 32).protect(x));
  }
}

TEST(Compare, SelfSimilarityIsOne) {
  for (SchemeId id : kAllSchemes) {
    const auto t = instantiate(key_for(id), 32).protect(random_features(6, 32));
    EXPECT_EQ(compare(t, t).value(), 1.0) << to_string(id);
  }
}

TEST(Compare, ComplementaryBitsScoreZero) {
  BitVector a(16), b(16);
  for (std::size_t i = 0; i < 16; ++i) (i % 3 ? a : b).set(i);
  EXPECT_EQ(compare({SchemeId::BioHash, BitString{a}}, {SchemeId::BioHash, BitString{b}}).value(), 0.0);
}

TEST(Compare, BloomPopcountByHand) {
  BitVector a(4), b(4);
  a.set(1);
  a.set(2);
  b.set(2);
  b.set(3);
  EXPECT_DOUBLE_EQ(
      compare({SchemeId::BloomFilter, BloomSet{{a}}}, {SchemeId::BloomFilter, BloomSet{{b}}}).value(), 0.5);
  // Two empty blocks contribute no dissimilarity.
  EXPECT_DOUBLE_EQ(compare({SchemeId::BloomFilter, BloomSet{{a, BitVector(4)}}},
                           {SchemeId::BloomFilter, BloomSet{{b, BitVector(4)}}})
                       .value(),
                   0.75);
}

TEST(Compare, CodesCountMatches) {
  const ProtectedTemplate a(SchemeId::IomGrp, CodeVector{{0, 1, 2, 3}, 4});
  const ProtectedTemplate b(SchemeId::IomGrp, CodeVector{{0, 1, 3, 2}, 4});
  EXPECT_DOUBLE_EQ(compare(a, b).value(), 0.5);
}

TEST(Compare, SymmetricAcrossSchemes) {
  for (SchemeId id : kAllSchemes) {
    const auto inst = instantiate(key_for(id), 32);
    const auto a = inst.protect(random_features(7, 32));
    const auto b = inst.protect(random_features(8, 32));
    EXPECT_EQ(compare(a, b).value(), compare(b, a).value()) << to_string(id);
  }
}

TEST(Compare, MismatchesRejected) {
  const auto a = instantiate(key_for(SchemeId::BioHash), 8).protect(random_features(1, 8));
  const auto b = instantiate(key_for(SchemeId::MlpHash), 8).protect(random_features(1, 8));
  EXPECT_THROW(compare(a, b), std::invalid_argument);
  EXPECT_THROW(compare({SchemeId::BioHash, BitString{BitVector(8)}},
                       {SchemeId::BioHash, BitString{BitVector(16)}}),
               std::invalid_argument);
}

TEST(ChanceLevel, Constants) {
  SchemeParams p;
  p.iom_k = 8;
  EXPECT_EQ(chance_level(SchemeId::BioHash, p), 0.5);
  EXPECT_EQ(chance_level(SchemeId::IomUrp, p), 0.125);
  EXPECT_FALSE(chance_level(SchemeId::BloomFilter, p).has_value());
}

TEST(Renewability, CrossKeySimilarityNearChance) {
  const auto x = random_features(11, 64);
  for (SchemeId id : {SchemeId::BioHash, SchemeId::IomGrp}) {
    const int n = 200;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto a = instantiate(key_for(id, 1000 + 2 * i), 64).protect(x);
      const auto b = instantiate(key_for(id, 1001 + 2 * i), 64).protect(x);
      sum += compare(a, b).value();
    }
    EXPECT_NEAR(sum / n, *chance_level(id, {}), 0.01) << to_string(id);
  }
}

}  // namespace
}  // namespace cbbench::schemes
