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

#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "cbbench/linalg.hpp"

namespace cbbench {

// ---------------------------------------------------------------------------
// Scheme and scenario identifiers

enum class SchemeId { BioHash, MlpHash, BloomFilter, IomGrp, IomUrp, RandHash };

inline constexpr std::array<SchemeId, 6> kAllSchemes = {
    SchemeId::BioHash, SchemeId::MlpHash, SchemeId::BloomFilter,
    SchemeId::IomGrp,  SchemeId::IomUrp,  SchemeId::RandHash};

inline constexpr std::string_view to_string(SchemeId id) {
  switch (id) {
    case SchemeId::BioHash: return "biohash";
    case SchemeId::MlpHash: return "mlphash";
    case SchemeId::BloomFilter: return "bloom";
    case SchemeId::IomGrp: return "iom-grp";
    case SchemeId::IomUrp: return "iom-urp";
    case SchemeId::RandHash: return "randhash";
  }
  return "unknown";
}

inline std::optional<SchemeId> parse_scheme(std::string_view name) {
  for (SchemeId id : kAllSchemes)
    if (to_string(id) == name) return id;
  return std::nullopt;
}

enum class Scenario { Normal, StolenToken, SampleSpecific };

inline constexpr std::array<Scenario, 3> kAllScenarios = {
    Scenario::Normal, Scenario::StolenToken, Scenario::SampleSpecific};

inline constexpr std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::Normal: return "normal";
    case Scenario::StolenToken: return "stolen-token";
    case Scenario::SampleSpecific: return "sample-specific";
  }
  return "unknown";
}

inline std::optional<Scenario> parse_scenario(std::string_view name) {
  if (name == "stolen") return Scenario::StolenToken;
  for (Scenario s : kAllScenarios)
    if (to_string(s) == name) return s;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Keys

struct SchemeParams {
  std::size_t length = 256;          // L: bits, or codes for IoM
  std::size_t iom_k = 16;            // alphabet per IoM code
  std::size_t iom_p = 2;             // permutations per URP hash
  std::size_t mlp_layers = 2;
  std::size_t bloom_word_bits = 4;   // w
  std::size_t bloom_block_cols = 16;

  void validate() const {
    auto fail = [](const std::string& what) {
      throw std::invalid_argument("scheme params: " + what);
    };
    if (length < 8) fail("length must be >= 8");
    if (iom_k < 2) fail("iom_k must be >= 2");
    if (iom_p < 1) fail("iom_p must be >= 1");
    if (mlp_layers < 1) fail("mlp_layers must be >= 1");
    if (bloom_word_bits < 2 || bloom_word_bits > 16) fail("bloom_word_bits must be in [2, 16]");
    if (bloom_block_cols < 1) fail("bloom_block_cols must be >= 1");
  }

  friend bool operator==(const SchemeParams&, const SchemeParams&) = default;
};

struct SchemeKey {
  std::uint64_t seed = 0;
  SchemeId scheme = SchemeId::BioHash;
  SchemeParams params;

  friend bool operator==(const SchemeKey&, const SchemeKey&) = default;
};

// ---------------------------------------------------------------------------
// Templates and datasets

struct Template {
  std::string subject_id;
  std::string sample_id;
  std::vector<double> features;

  friend bool operator==(const Template&, const Template&) = default;
};

struct Dataset {
  std::vector<Template> templates;
  std::size_t dimension = 0;

  /// Template indices grouped by subject, subjects in order of first
  /// appearance, samples in dataset order.
  std::vector<std::vector<std::size_t>> subjects() const {
    std::map<std::string_view, std::size_t> slot;
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < templates.size(); ++i) {
      auto [it, inserted] = slot.try_emplace(templates[i].subject_id, groups.size());
      if (inserted) groups.emplace_back();
      groups[it->second].push_back(i);
    }
    return groups;
  }

  Matrix feature_matrix() const {
    Matrix m(static_cast<Index>(templates.size()), static_cast<Index>(dimension));
    for (std::size_t i = 0; i < templates.size(); ++i)
      for (std::size_t j = 0; j < dimension; ++j)
        m(static_cast<Index>(i), static_cast<Index>(j)) = templates[i].features[j];
    return m;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct Violation {
  enum class Kind { DuplicateId, DimensionMismatch, NonFinite, TooFewSamples, DimensionTooSmall };
  Kind kind;
  std::string subject_id;
  std::string sample_id;
  std::size_t template_index = 0;
  std::size_t feature_index = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

inline ValidationReport validate_dataset(const Dataset& ds) {
  ValidationReport report;
  auto add = [&](Violation::Kind kind, std::size_t idx, std::size_t feature,
                 std::string message) {
    const Template& t = ds.templates[idx];
    report.violations.push_back({kind, t.subject_id, t.sample_id, idx, feature,
                                 std::move(message)});
  };
  if (ds.dimension < 2) {
    report.violations.push_back({Violation::Kind::DimensionTooSmall, "", "", 0, 0,
                                 "dimension must be >= 2, got " +
                                     std::to_string(ds.dimension)});
  }
  std::set<std::pair<std::string_view, std::string_view>> seen;
  for (std::size_t i = 0; i < ds.templates.size(); ++i) {
    const Template& t = ds.templates[i];
    const std::string who = "(" + t.subject_id + ", " + t.sample_id + ")";
    if (!seen.emplace(t.subject_id, t.sample_id).second)
      add(Violation::Kind::DuplicateId, i, 0, "duplicate template " + who);
    if (t.features.size() != ds.dimension) {
      add(Violation::Kind::DimensionMismatch, i, 0,
          "template " + who + " has " + std::to_string(t.features.size()) +
              " features, expected " + std::to_string(ds.dimension));
    }
    for (std::size_t j = 0; j < t.features.size(); ++j) {
      if (!std::isfinite(t.features[j])) {
        add(Violation::Kind::NonFinite, i, j,
            "template " + who + " feature " + std::to_string(j) + " is not finite");
      }
    }
  }
  for (const auto& group : ds.subjects()) {
    if (group.size() < 2) {
      add(Violation::Kind::TooFewSamples, group.front(), 0,
          "subject " + ds.templates[group.front()].subject_id +
              " has fewer than 2 samples");
    }
  }
  return report;
}

inline void require_valid(const Dataset& ds) {
  const ValidationReport report = validate_dataset(ds);
  if (!report.ok())
    throw std::invalid_argument("invalid dataset: " + report.violations.front().message);
}

// ---------------------------------------------------------------------------
// Protected templates

class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  std::size_t size() const noexcept { return size_; }

  bool test(std::size_t i) const { return (words_.at(i / 64) >> (i % 64)) & 1U; }

  void set(std::size_t i, bool value = true) {
    if (i >= size_) throw std::out_of_range("BitVector::set");
    const std::uint64_t bit = std::uint64_t{1} << (i % 64);
    if (value)
      words_[i / 64] |= bit;
    else
      words_[i / 64] &= ~bit;
  }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (std::uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  /// Popcount of a XOR b.
  friend std::size_t xor_count(const BitVector& a, const BitVector& b) {
    if (a.size_ != b.size_) throw std::invalid_argument("bit vector length mismatch");
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i)
      n += static_cast<std::size_t>(std::popcount(a.words_[i] ^ b.words_[i]));
    return n;
  }

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

struct BitString {
  BitVector bits;
  friend bool operator==(const BitString&, const BitString&) = default;
};

struct CodeVector {
  std::vector<std::uint32_t> codes;
  std::uint32_t alphabet = 0;  // every code < alphabet
  friend bool operator==(const CodeVector&, const CodeVector&) = default;
};

struct BloomSet {
  std::vector<BitVector> blocks;  // each 2^w bits
  friend bool operator==(const BloomSet&, const BloomSet&) = default;
};

using Payload = std::variant<BitString, CodeVector, BloomSet>;

class ProtectedTemplate {
 public:
  ProtectedTemplate(SchemeId scheme, Payload payload)
      : scheme_(scheme), payload_(std::move(payload)) {
    const bool matches = std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, BitString>) {
            return scheme == SchemeId::BioHash || scheme == SchemeId::MlpHash ||
                   scheme == SchemeId::RandHash;
          } else if constexpr (std::is_same_v<T, CodeVector>) {
            return scheme == SchemeId::IomGrp || scheme == SchemeId::IomUrp;
          } else {
            return scheme == SchemeId::BloomFilter;
          }
        },
        payload_);
    if (!matches) {
      throw std::invalid_argument("payload variant does not match scheme " +
                                  std::string(to_string(scheme)));
    }
    if (const auto* cv = std::get_if<CodeVector>(&payload_)) {
      if (cv->alphabet < 2) throw std::invalid_argument("code alphabet must be >= 2");
      for (std::uint32_t c : cv->codes)
        if (c >= cv->alphabet) throw std::invalid_argument("code outside alphabet");
    }
    if (const auto* bs = std::get_if<BloomSet>(&payload_)) {
      for (const BitVector& b : bs->blocks) {
        if (b.size() != bs->blocks.front().size() || !std::has_single_bit(b.size()))
          throw std::invalid_argument("bloom blocks must share one power-of-two size");
      }
    }
  }

  SchemeId scheme() const noexcept { return scheme_; }
  const Payload& payload() const noexcept { return payload_; }

  /// Number of stored elements: bits, codes, or filter bits.
  std::size_t element_count() const {
    return std::visit(
        [](const auto& p) -> std::size_t {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, BitString>) {
            return p.bits.size();
          } else if constexpr (std::is_same_v<T, CodeVector>) {
            return p.codes.size();
          } else {
            return p.blocks.empty() ? 0 : p.blocks.size() * p.blocks.front().size();
          }
        },
        payload_);
  }

  /// Storage length in bits (codes count ceil(log2 k) bits each).
  std::size_t bit_length() const {
    if (const auto* cv = std::get_if<CodeVector>(&payload_)) {
      return cv->codes.size() * static_cast<std::size_t>(std::bit_width(cv->alphabet - 1));
    }
    return element_count();
  }

  /// Real-valued row: bits as 0/1, codes as their values, filters
  /// concatenated block by block.
  std::vector<double> to_row() const {
    std::vector<double> row;
    row.reserve(element_count());
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, BitString>) {
            for (std::size_t i = 0; i < p.bits.size(); ++i) row.push_back(p.bits.test(i));
          } else if constexpr (std::is_same_v<T, CodeVector>) {
            for (std::uint32_t c : p.codes) row.push_back(c);
          } else {
            for (const BitVector& b : p.blocks)
              for (std::size_t i = 0; i < b.size(); ++i) row.push_back(b.test(i));
          }
        },
        payload_);
    return row;
  }

  friend bool operator==(const ProtectedTemplate&, const ProtectedTemplate&) = default;

 private:
  SchemeId scheme_;
  Payload payload_;
};

// ---------------------------------------------------------------------------
// Scores

/// Similarity in [0, 1]; out-of-range input is a comparator bug and throws.
class Score {
 public:
  explicit Score(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0))
      throw std::out_of_range("score " + std::to_string(value) + " outside [0, 1]");
  }
  double value() const noexcept { return value_; }
  friend auto operator<=>(const Score&, const Score&) = default;

 private:
  double value_;
};

}  // namespace cbbench
