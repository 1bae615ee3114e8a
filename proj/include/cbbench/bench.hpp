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

// Full benchmark: every configured (scheme, scenario) cell is run through
// the metric families that apply to its scenario.
//
//   normal, stolen-token   DET / EER / FNMR@FMR, mutual information
//   sample-specific        unlinkability

#pragma once

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <system_error>
#include <utility>
#include <variant>
#include <vector>

#include "cbbench/core.hpp"
#include "cbbench/io.hpp"
#include "cbbench/metrics.hpp"
#include "cbbench/protocol.hpp"
#include "cbbench/schemes.hpp"
#include "cbbench/synthdata.hpp"

#ifndef CBBENCH_VERSION
#define CBBENCH_VERSION "0.1.0"
#endif

namespace cbbench {

inline constexpr const char* kVersion = CBBENCH_VERSION;

/// Failure inside one benchmark cell.
class CellError : public std::runtime_error {
 public:
  CellError(std::string cell, const std::string& cause)
      : std::runtime_error(cell + ": " + cause), cell_(std::move(cell)) {}
  const std::string& cell() const noexcept { return cell_; }

 private:
  std::string cell_;
};

inline bool measures_performance(Scenario s) { return s != Scenario::SampleSpecific; }
inline bool measures_irreversibility(Scenario s) { return s != Scenario::SampleSpecific; }
inline bool measures_unlinkability(Scenario s) { return s == Scenario::SampleSpecific; }

inline std::string det_file_name(SchemeId scheme, Scenario scenario) {
  return "det_" + std::string(to_string(scheme)) + "_" + std::string(to_string(scenario)) + ".csv";
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Dataset load_input(const BenchmarkConfig& cfg) {
  if (const auto* synth = std::get_if<SynthConfig>(&cfg.input)) return generate(*synth);
  return read_templates(std::get<std::filesystem::path>(cfg.input));
}

/// Report plus the DET curves it refers to, keyed by file name.
struct BenchmarkResult {
  BenchmarkReport report;
  std::vector<std::pair<std::string, DetCurve>> det_curves;
};

using ProgressFn = std::function<void(const std::string&)>;

inline CellReport run_cell(const Dataset& ds, const Matrix& unprotected, const SchemeSpec& spec,
                           Scenario scenario, const BenchmarkConfig& cfg, DetCurve* det_out) {
  const KeyPolicy policy{cfg.master_seed, scenario, spec.scheme, spec.params};
  const RunOptions options{cfg.threads, true};
  CellReport cell;
  cell.scheme = spec.scheme;
  cell.scenario = scenario;
  cell.effective_bits = schemes::effective_bits(spec.scheme, spec.params, ds.dimension);

  const auto templates = protect_dataset(ds, policy, options);
  cell.template_bits = templates.front().bit_length();
  ScoreSet scores = score_pairs(
      ds, [&](std::size_t a, std::size_t b) { return schemes::compare(templates[a], templates[b]).value(); },
      cfg.threads);
  scores.scheme = spec.scheme;
  scores.scenario = scenario;
  cell.mated_count = scores.mated.size();
  cell.nonmated_count = scores.nonmated.size();

  if (measures_performance(scenario)) {
    DetCurve curve = compute_det(scores);
    cell.performance = summarize(curve);
    cell.det_file = det_file_name(spec.scheme, scenario);
    *det_out = std::move(curve);
  }
  if (measures_unlinkability(scenario))
    cell.unlinkability = unlinkability(scores, cfg.unlinkability_bins);
  if (measures_irreversibility(scenario))
    cell.irreversibility = mutual_information(unprotected, protected_matrix(templates), cfg.mi_components);
  return cell;
}

/// Runs every cell in memory; nothing is written.
inline BenchmarkResult compute_benchmark(const BenchmarkConfig& cfg, const Dataset& ds,
                                         const ProgressFn& progress = {}) {
  cfg.validate();
  require_valid(ds);
  BenchmarkResult result;
  BenchmarkReport& report = result.report;
  report.toolkit_version = kVersion;
  report.timestamp = utc_timestamp();
  report.config = cfg;
  report.dataset = {ds.subjects().size(), ds.templates.size(), ds.dimension,
                    mated_pairs(ds).size(), nonmated_pairs(ds).size()};

  const ScoreSet baseline = unprotected_scores(ds, cfg.threads);
  const DetCurve baseline_curve = compute_det(baseline);
  report.unprotected = summarize(baseline_curve);
  report.unprotected_det_file = "det_unprotected.csv";
  result.det_curves.emplace_back(report.unprotected_det_file, baseline_curve);

  std::vector<SchemeSpec> specs = cfg.schemes;
  std::sort(specs.begin(), specs.end(),
            [](const SchemeSpec& a, const SchemeSpec& b) { return a.scheme < b.scheme; });
  std::vector<Scenario> scenarios = cfg.scenarios;
  std::sort(scenarios.begin(), scenarios.end());

  const Matrix unprotected = ds.feature_matrix();
  for (const SchemeSpec& spec : specs) {
    for (Scenario scenario : scenarios) {
      const std::string name =
          std::string(to_string(spec.scheme)) + "/" + std::string(to_string(scenario));
      if (progress) progress(name);
      DetCurve curve;
      try {
        report.cells.push_back(run_cell(ds, unprotected, spec, scenario, cfg, &curve));
      } catch (const std::exception& e) {
        throw CellError("cell " + name, e.what());
      }
      if (!report.cells.back().det_file.empty())
        result.det_curves.emplace_back(report.cells.back().det_file, std::move(curve));
    }
  }
  return result;
}

/// Writes report.json and the DET files into `out_dir`. On failure every
/// file written so far is removed, as is the directory if this call made it.
inline std::filesystem::path write_benchmark(const BenchmarkResult& result,
                                             const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const bool created = !fs::exists(out_dir) && fs::create_directories(out_dir, ec);
  if (ec) throw IoError(out_dir, "cannot create directory: " + ec.message());
  std::vector<fs::path> written;
  try {
    for (const auto& [name, curve] : result.det_curves) {
      written.push_back(out_dir / name);
      write_det_points(curve, written.back());
    }
    written.push_back(out_dir / "report.json");
    write_report(result.report, written.back());
  } catch (...) {
    for (const auto& p : written) fs::remove(p, ec);
    if (created) fs::remove(out_dir, ec);
    throw;
  }
  return out_dir / "report.json";
}

/// Loads the input, runs all cells, writes the outputs.
inline BenchmarkResult run_benchmark(const BenchmarkConfig& cfg, const ProgressFn& progress = {}) {
  const Dataset ds = load_input(cfg);
  BenchmarkResult result = compute_benchmark(cfg, ds, progress);
  write_benchmark(result, cfg.out_dir);
  return result;
}

}  // namespace cbbench
