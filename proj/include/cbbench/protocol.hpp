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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "cbbench/core.hpp"
#include "cbbench/detail/parallel.hpp"
#include "cbbench/random.hpp"
#include "cbbench/schemes.hpp"

namespace cbbench {

/// How per-template keys are derived for one (scheme, scenario) run.
///   Normal          one key per subject
///   StolenToken     one key for everybody
///   SampleSpecific  one key per (subject, sample)
struct KeyPolicy {
  std::uint64_t master_seed = 0;
  Scenario scenario = Scenario::Normal;
  SchemeId scheme = SchemeId::BioHash;
  SchemeParams params;
};

/// seed = hash64(master_seed || scenario tag || identity fields), with
/// length-prefixed fields.
inline SchemeKey derive_key(const KeyPolicy& policy, std::string_view subject_id,
                            std::string_view sample_id) {
  Hash64 h;
  h.u64(policy.master_seed).field("cbbench/key");
  switch (policy.scenario) {
    case Scenario::StolenToken: h.field("stolen-token"); break;
    case Scenario::Normal: h.field("subject").field(subject_id); break;
    case Scenario::SampleSpecific:
      h.field("sample").field(subject_id).field(sample_id);
      break;
  }
  return SchemeKey{h.digest(), policy.scheme, policy.params};
}

using TemplatePair = std::pair<std::size_t, std::size_t>;

/// All unordered sample pairs within each subject.
inline std::vector<TemplatePair> mated_pairs(const Dataset& ds) {
  std::vector<TemplatePair> pairs;
  for (const auto& group : ds.subjects())
    for (std::size_t i = 0; i < group.size(); ++i)
      for (std::size_t j = i + 1; j < group.size(); ++j) pairs.emplace_back(group[i], group[j]);
  return pairs;
}

/// All unordered subject pairs, first sample of each.
inline std::vector<TemplatePair> nonmated_pairs(const Dataset& ds) {
  std::vector<std::size_t> first;
  for (const auto& group : ds.subjects()) first.push_back(group.front());
  std::vector<TemplatePair> pairs;
  for (std::size_t i = 0; i < first.size(); ++i)
    for (std::size_t j = i + 1; j < first.size(); ++j) pairs.emplace_back(first[i], first[j]);
  return pairs;
}

/// Mated and non-mated similarity scores, each list sorted ascending.
struct ScoreSet {
  std::vector<double> mated;
  std::vector<double> nonmated;
  std::optional<SchemeId> scheme;  // empty for unprotected templates
  Scenario scenario = Scenario::Normal;

  friend bool operator==(const ScoreSet&, const ScoreSet&) = default;
};

struct RunOptions {
  unsigned threads = 0;         // 0: hardware concurrency
  bool cache_instances = true;  // instantiate once per distinct key
};

/// Every template protected under its policy-derived key, in dataset order.
inline std::vector<ProtectedTemplate> protect_dataset(const Dataset& ds, const KeyPolicy& policy,
                                                      const RunOptions& options = {}) {
  require_valid(ds);
  const std::size_t n = ds.templates.size();
  std::vector<SchemeKey> keys;
  keys.reserve(n);
  for (const Template& t : ds.templates)
    keys.push_back(derive_key(policy, t.subject_id, t.sample_id));

  // Each job owns the templates sharing one key.
  std::vector<std::vector<std::size_t>> jobs;
  if (options.cache_instances) {
    std::map<std::uint64_t, std::size_t> slot;
    for (std::size_t i = 0; i < n; ++i) {
      auto [it, inserted] = slot.try_emplace(keys[i].seed, jobs.size());
      if (inserted) jobs.emplace_back();
      jobs[it->second].push_back(i);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) jobs.push_back({i});
  }

  std::vector<std::optional<ProtectedTemplate>> out(n);
  detail::parallel_for(jobs.size(), options.threads, [&](std::size_t j) {
    const auto inst = schemes::instantiate(keys[jobs[j].front()], ds.dimension);
    for (std::size_t i : jobs[j]) out[i] = inst.protect(ds.templates[i].features);
  });

  std::vector<ProtectedTemplate> result;
  result.reserve(n);
  for (auto& p : out) result.push_back(std::move(*p));
  return result;
}

/// Scores over pair lists with an arbitrary comparator; sorted ascending.
template <typename Compare>
ScoreSet score_pairs(const Dataset& ds, Compare&& cmp, unsigned threads = 0) {
  const auto mated = mated_pairs(ds);
  const auto nonmated = nonmated_pairs(ds);
  if (mated.empty() || nonmated.empty())
    throw std::invalid_argument("dataset yields no mated or no non-mated pairs");
  ScoreSet set;
  set.mated.resize(mated.size());
  set.nonmated.resize(nonmated.size());
  const std::size_t total = mated.size() + nonmated.size();
  constexpr std::size_t kChunk = 4096;
  detail::parallel_for((total + kChunk - 1) / kChunk, threads, [&](std::size_t c) {
    const std::size_t end = std::min(total, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      if (i < mated.size())
        set.mated[i] = cmp(mated[i].first, mated[i].second);
      else
        set.nonmated[i - mated.size()] =
            cmp(nonmated[i - mated.size()].first, nonmated[i - mated.size()].second);
    }
  });
  std::sort(set.mated.begin(), set.mated.end());
  std::sort(set.nonmated.begin(), set.nonmated.end());
  return set;
}

/// Protect every template under its derived key and score the protocol's
/// mated and non-mated pairs.
inline ScoreSet run_scenario(const Dataset& ds, const KeyPolicy& policy,
                             const RunOptions& options = {}) {
  const auto protected_templates = protect_dataset(ds, policy, options);
  ScoreSet set = score_pairs(
      ds,
      [&](std::size_t a, std::size_t b) {
        return schemes::compare(protected_templates[a], protected_templates[b]).value();
      },
      options.threads);
  set.scheme = policy.scheme;
  set.scenario = policy.scenario;
  return set;
}

}  // namespace cbbench
