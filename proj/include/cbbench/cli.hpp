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

// Subcommands:
//
//   synth        write a synthetic template CSV
//   protect      write protected templates for one scheme and scenario
//   eval-perf    DET / EER / FNMR@FMR for one cell
//   eval-unlink  D_sys for one scheme (sample-specific keys only)
//   eval-irrev   mutual information for one cell
//   bench        the full benchmark from a config file
//
// Exit status: 0 on success, 1 on a runtime failure, 2 on a usage error.

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cbbench/bench.hpp"
#include "cbbench/core.hpp"
#include "cbbench/io.hpp"
#include "cbbench/metrics.hpp"
#include "cbbench/protocol.hpp"
#include "cbbench/synthdata.hpp"

namespace cbbench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

namespace cli_detail {

inline std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

struct SynthFlags {
  SynthConfig cfg;
  void add(CLI::App& app, const std::string& seed_flag) {
    app.add_option("--subjects", cfg.subjects, "number of subjects")->capture_default_str();
    app.add_option("--samples", cfg.samples_per_subject, "samples per subject")->capture_default_str();
    app.add_option("--dim", cfg.dimension, "feature dimension")->capture_default_str();
    app.add_option("--sigma", cfg.noise_sigma, "noise-to-signal ratio")->capture_default_str();
    app.add_option(seed_flag, cfg.seed, "dataset seed")->capture_default_str();
  }
};

struct ParamFlags {
  SchemeParams params;
  void add(CLI::App& app) {
    app.add_option("--length", params.length, "template length L")->capture_default_str();
    app.add_option("--iom-k", params.iom_k, "IoM alphabet size")->capture_default_str();
    app.add_option("--iom-p", params.iom_p, "IoM-URP permutations per hash")->capture_default_str();
    app.add_option("--mlp-layers", params.mlp_layers, "MLP-Hash layers")->capture_default_str();
    app.add_option("--bloom-word-bits", params.bloom_word_bits, "Bloom word bits")->capture_default_str();
    app.add_option("--bloom-block-cols", params.bloom_block_cols, "Bloom block columns")
        ->capture_default_str();
  }
};

// Either --templates or the synthetic flags.
struct InputFlags {
  std::string templates;
  SynthFlags synth;
  void add(CLI::App& app) {
    app.add_option("--templates", templates, "template CSV (default: synthetic data)");
    synth.add(app, "--data-seed");
  }
  Dataset load() const {
    return templates.empty() ? generate(synth.cfg) : read_templates(templates);
  }
};

struct CellFlags {
  InputFlags input;
  ParamFlags params;
  std::string scheme = "biohash";
  std::string scenario = "normal";
  std::uint64_t seed = 42;
  unsigned threads = 0;

  void add(CLI::App& app, bool allow_unprotected) {
    input.add(app);
    params.add(app);
    std::vector<std::string> names;
    if (allow_unprotected) names.push_back("unprotected");
    for (SchemeId id : kAllSchemes) names.emplace_back(to_string(id));
    app.add_option("--scheme", scheme, "protection scheme")
        ->check(CLI::IsMember(names))
        ->capture_default_str();
    app.add_option("--scenario", scenario, "normal | stolen-token | sample-specific")
        ->capture_default_str();
    app.add_option("--seed", seed, "master key seed")->capture_default_str();
    app.add_option("--threads", threads, "worker threads (0: all cores)")->capture_default_str();
  }

  Scenario parsed_scenario() const {
    const auto s = parse_scenario(scenario);
    if (!s) throw CLI::ValidationError("--scenario", "unknown scenario '" + scenario + "'");
    return *s;
  }
  std::optional<SchemeId> parsed_scheme() const { return parse_scheme(scheme); }
  KeyPolicy policy() const {
    return KeyPolicy{seed, parsed_scenario(), parsed_scheme().value(), params.params};
  }
  RunOptions options() const { return RunOptions{threads, true}; }
  std::string cell_name() const { return scheme + "/" + scenario; }
};

inline void print_performance(std::ostream& out, const DetCurve& curve) {
  const PerformanceSummary s = summarize(curve);
  out << "EER " << fixed4(s.eer) << '\n'
      << "FNMR@FMR=1% " << fixed4(s.fnmr_at_fmr_1pct) << '\n'
      << "FNMR@FMR=0.1% " << fixed4(s.fnmr_at_fmr_0p1pct) << '\n';
}

inline int cmd_synth(const SynthConfig& cfg, const std::string& out_path, std::ostream& out) {
  const Dataset ds = generate(cfg);
  write_templates(ds, std::filesystem::path(out_path));
  out << "wrote " << out_path << ": " << cfg.subjects << " subjects x " << cfg.samples_per_subject
      << " samples, d=" << cfg.dimension << '\n';
  return kExitOk;
}

inline int cmd_protect(const CellFlags& f, const std::string& out_path, std::ostream& out) {
  if (!f.parsed_scheme()) throw CLI::ValidationError("--scheme", "protect needs a protection scheme");
  const Dataset ds = f.input.load();
  const auto templates = protect_dataset(ds, f.policy(), f.options());
  Dataset result;
  result.dimension = templates.front().element_count();
  for (std::size_t i = 0; i < templates.size(); ++i)
    result.templates.push_back(
        {ds.templates[i].subject_id, ds.templates[i].sample_id, templates[i].to_row()});
  write_templates(result, std::filesystem::path(out_path));
  out << "wrote " << out_path << ": " << result.templates.size() << " templates, "
      << templates.front().bit_length() << " bits each\n";
  return kExitOk;
}

inline void maybe_write_det(const std::string& out_dir, const std::string& name, const DetCurve& curve,
                            std::ostream& out) {
  if (out_dir.empty()) return;
  std::filesystem::create_directories(out_dir);
  const auto path = std::filesystem::path(out_dir) / name;
  write_det_points(curve, path);
  out << "wrote " << path.string() << '\n';
}

inline int cmd_eval_perf(const CellFlags& f, const std::string& out_dir, std::ostream& out) {
  const Scenario scenario = f.parsed_scenario();
  if (!measures_performance(scenario))
    throw CLI::ValidationError("--scenario",
                               "performance is evaluated under normal or stolen-token keys");
  const Dataset ds = f.input.load();
  if (!f.parsed_scheme()) {
    const DetCurve curve = compute_det(unprotected_scores(ds, f.threads));
    print_performance(out, curve);
    maybe_write_det(out_dir, "det_unprotected.csv", curve, out);
    return kExitOk;
  }
  const DetCurve curve = compute_det(run_scenario(ds, f.policy(), f.options()));
  print_performance(out, curve);
  maybe_write_det(out_dir, det_file_name(*f.parsed_scheme(), scenario), curve, out);
  return kExitOk;
}

inline int cmd_eval_unlink(const CellFlags& f, std::size_t bins, const std::string& out_dir,
                           std::ostream& out) {
  if (!measures_unlinkability(f.parsed_scenario()))
    throw CLI::ValidationError("--scenario",
                               "unlinkability requires sample-specific keys (--scenario "
                               "sample-specific), got '" + f.scenario + "'");
  const Dataset ds = f.input.load();
  const UnlinkabilityReport r = unlinkability(run_scenario(ds, f.policy(), f.options()), bins);
  out << "D_sys " << fixed4(r.d_sys) << '\n';
  if (r.degenerate) out << "note: all scores equal, D_sys reported as 0\n";
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / ("unlink_" + f.scheme + ".csv");
    auto file = detail::open_output(path);
    file << "score,d\n";
    for (const auto& p : r.local_curve) file << format_real(p.score) << ',' << format_real(p.d) << '\n';
    detail::finish_output(file, path);
    out << "wrote " << path.string() << '\n';
  }
  return kExitOk;
}

inline int cmd_eval_irrev(const CellFlags& f, std::size_t r, std::ostream& out, std::ostream& err) {
  if (!measures_irreversibility(f.parsed_scenario()))
    throw CLI::ValidationError("--scenario",
                               "irreversibility is evaluated under normal or stolen-token keys");
  const Dataset ds = f.input.load();
  const IrreversibilityReport m =
      mutual_information(ds.feature_matrix(), protected_matrix(ds, f.policy(), f.options()), r);
  if (m.r_shrunk)
    err << "warning: r=" << r << " exceeds what the data supports, using r=" << m.r_used << '\n';
  out << "MI " << fixed4(m.mi) << " nats\n"
      << "H(X) " << fixed4(m.h_x) << '\n'
      << "H(Y) " << fixed4(m.h_y) << '\n'
      << "H(X,Y) " << fixed4(m.h_joint) << '\n'
      << "r " << m.r_used << '\n';
  if (m.near_deterministic) err << "warning: joint covariance is near-singular\n";
  return kExitOk;
}

inline int cmd_bench(const std::string& config_path, const std::string& out_dir,
                     std::optional<std::uint64_t> seed, std::optional<unsigned> threads,
                     std::ostream& out, std::ostream& err) {
  BenchmarkConfig cfg = config_path.empty() ? standard_config() : read_config(config_path);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (seed) cfg.master_seed = *seed;
  if (threads) cfg.threads = *threads;
  cfg.validate();
  const BenchmarkResult result =
      run_benchmark(cfg, [&](const std::string& cell) { err << "running " << cell << '\n'; });
  const BenchmarkReport& report = result.report;
  out << "unprotected EER " << fixed4(report.unprotected.eer) << '\n';
  for (const CellReport& c : report.cells) {
    out << to_string(c.scheme) << ' ' << to_string(c.scenario);
    if (c.performance) out << " EER " << fixed4(c.performance->eer);
    if (c.irreversibility) out << " MI " << fixed4(c.irreversibility->mi);
    if (c.unlinkability) out << " D_sys " << fixed4(c.unlinkability->d_sys);
    out << '\n';
  }
  out << "wrote " << (cfg.out_dir / "report.json").string() << '\n';
  return kExitOk;
}

}  // namespace cli_detail

/// Parses argv and runs one subcommand. Never calls exit().
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  CLI::App app{"cbbench: benchmark cancelable biometric template protection", "cbbench"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  auto* synth = app.add_subcommand("synth", "write a synthetic template CSV");
  SynthFlags synth_flags;
  std::string synth_out;
  synth_flags.add(*synth, "--seed");
  synth->add_option("--out", synth_out, "output CSV")->required();

  auto* protect = app.add_subcommand("protect", "protect templates under one scheme and scenario");
  CellFlags protect_flags;
  std::string protect_out;
  protect_flags.add(*protect, false);
  protect->add_option("--out", protect_out, "output CSV")->required();

  auto* perf = app.add_subcommand("eval-perf", "recognition performance of one cell");
  CellFlags perf_flags;
  std::string perf_dir;
  perf_flags.add(*perf, true);
  perf->add_option("--out-dir", perf_dir, "directory for the DET CSV");

  auto* unlink = app.add_subcommand("eval-unlink", "unlinkability of one scheme");
  CellFlags unlink_flags;
  unlink_flags.scenario = "sample-specific";
  std::string unlink_dir;
  std::size_t bins = kDefaultUnlinkabilityBins;
  unlink_flags.add(*unlink, false);
  unlink->add_option("--bins", bins, "histogram bins (>= 10)")->capture_default_str();
  unlink->add_option("--out-dir", unlink_dir, "directory for the local-linkability CSV");

  auto* irrev = app.add_subcommand("eval-irrev", "mutual information of one cell");
  CellFlags irrev_flags;
  std::size_t r = kDefaultMiComponents;
  irrev_flags.add(*irrev, false);
  irrev->add_option("--r", r, "PCA components")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "run the full benchmark");
  std::string config_path, bench_dir;
  std::optional<std::uint64_t> bench_seed;
  std::optional<unsigned> bench_threads;
  bench->add_option("--config", config_path, "benchmark config JSON (default: standard config)");
  bench->add_option("--out-dir", bench_dir, "output directory (overrides the config)");
  bench->add_option("--seed", bench_seed, "master seed (overrides the config)");
  bench->add_option("--threads", bench_threads, "worker threads (overrides the config)");

  std::string where = "cbbench";
  try {
    app.parse(argc, argv);
    if (synth->parsed()) {
      where = "synth";
      synth_flags.cfg.validate();
      return cmd_synth(synth_flags.cfg, synth_out, out);
    }
    if (protect->parsed()) {
      where = "protect " + protect_flags.cell_name();
      return cmd_protect(protect_flags, protect_out, out);
    }
    if (perf->parsed()) {
      where = "eval-perf " + perf_flags.cell_name();
      return cmd_eval_perf(perf_flags, perf_dir, out);
    }
    if (unlink->parsed()) {
      where = "eval-unlink " + unlink_flags.cell_name();
      return cmd_eval_unlink(unlink_flags, bins, unlink_dir, out);
    }
    if (irrev->parsed()) {
      where = "eval-irrev " + irrev_flags.cell_name();
      return cmd_eval_irrev(irrev_flags, r, out, err);
    }
    where = "bench";
    return cmd_bench(config_path, bench_dir, bench_seed, bench_threads, out, err);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ValidationError& e) {
    err << "cbbench " << where << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "cbbench " << where << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    // Precondition failures on user-supplied values.
    err << "cbbench " << where << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "cbbench " << where << ": " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace cbbench
