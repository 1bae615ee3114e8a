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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbbench/core.hpp"
#include "cbbench/protocol.hpp"
#include "cbbench/random.hpp"

namespace cbbench {

/// Class-conditional unit-sphere embeddings. Each subject has a random unit
/// mean direction; each sample is normalize(mean + sigma * n) where n has
/// i.i.d. N(0, 1/d) coordinates, so sigma is the noise-to-signal norm ratio
/// independent of the dimension.
struct SynthConfig {
  std::size_t subjects = 50;
  std::size_t samples_per_subject = 6;
  std::size_t dimension = 128;
  double noise_sigma = 0.35;
  std::uint64_t seed = 42;

  void validate() const {
    if (subjects < 2) throw std::invalid_argument("synth: subjects must be >= 2");
    if (samples_per_subject < 2)
      throw std::invalid_argument("synth: samples per subject must be >= 2");
    if (dimension < 2) throw std::invalid_argument("synth: dimension must be >= 2");
    if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma))
      throw std::invalid_argument("synth: sigma must be finite and > 0");
  }

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

namespace detail {
inline void normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw std::runtime_error("synth: zero-norm draw");
  for (double& x : v) x /= norm;
}
}  // namespace detail

inline Dataset generate(const SynthConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.dimension = cfg.dimension;
  ds.templates.reserve(cfg.subjects * cfg.samples_per_subject);
  const double noise_scale = cfg.noise_sigma / std::sqrt(static_cast<double>(cfg.dimension));
  const int width = static_cast<int>(std::to_string(cfg.subjects - 1).size());
  for (std::size_t s = 0; s < cfg.subjects; ++s) {
    RandomStream mean_stream = derive_stream(cfg.seed, "synth/mean/" + std::to_string(s));
    std::vector<double> mean(cfg.dimension);
    for (double& m : mean) m = mean_stream.gaussian();
    detail::normalize(mean);

    std::string subject = std::to_string(s);
    subject.insert(0, static_cast<std::size_t>(std::max(0, width - static_cast<int>(subject.size()))), '0');
    subject.insert(0, "subject");
    for (std::size_t j = 0; j < cfg.samples_per_subject; ++j) {
      RandomStream noise_stream = derive_stream(
          cfg.seed, "synth/noise/" + std::to_string(s) + "/" + std::to_string(j));
      std::vector<double> features(cfg.dimension);
      for (std::size_t i = 0; i < cfg.dimension; ++i)
        features[i] = mean[i] + noise_scale * noise_stream.gaussian();
      detail::normalize(features);
      ds.templates.push_back({subject, std::to_string(j), std::move(features)});
    }
  }
  return ds;
}

/// Cosine similarity mapped to [0, 1] by (1 + cos) / 2.
inline double cosine_score(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_score: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0 && nb > 0.0)) throw std::invalid_argument("cosine_score: zero vector");
  const double cos = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  return Score((1.0 + cos) / 2.0).value();
}

/// Baseline scores of the unprotected templates over the protocol pairs.
inline ScoreSet unprotected_scores(const Dataset& ds, unsigned threads = 0) {
  require_valid(ds);
  ScoreSet set = score_pairs(
      ds,
      [&](std::size_t a, std::size_t b) {
        return cosine_score(ds.templates[a].features, ds.templates[b].features);
      },
      threads);
  set.scheme.reset();
  return set;
}

}  // namespace cbbench
