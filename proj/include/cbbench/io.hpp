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

// File formats.
//
//   templates   CSV, header "subject_id,sample_id,f0,...,f{d-1}", one
//               template per row in dataset order
//   DET points  CSV, header "threshold,fmr,fnmr", ascending threshold
//   config      JSON BenchmarkConfig
//   report      JSON BenchmarkReport
//
// All text is UTF-8 with LF line endings. Reals are written in the shortest
// decimal form that reads back to the identical double.

#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cbbench/core.hpp"
#include "cbbench/metrics.hpp"
#include "cbbench/synthdata.hpp"

namespace cbbench {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  IoError(const std::filesystem::path& path, const std::string& what)
      : std::runtime_error(path.string() + ": " + what), path_(path) {}
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

/// Configuration problem (unknown names, out-of-range values).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Number formatting

inline std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_real(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

inline bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  return out;
}

inline void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Templates

inline Dataset parse_templates(std::istream& in, const std::string& source = "<input>") {
  std::string line;
  std::size_t line_no = 1;
  if (!detail::next_line(in, line)) throw ParseError(source, 1, "missing header");
  const auto header = detail::split_csv(line);
  if (header.size() < 4 || header[0] != "subject_id" || header[1] != "sample_id")
    throw ParseError(source, 1, "header must be subject_id,sample_id,f0,...,f{d-1} with d >= 2");
  for (std::size_t i = 2; i < header.size(); ++i) {
    if (header[i] != "f" + std::to_string(i - 2))
      throw ParseError(source, 1, "expected column f" + std::to_string(i - 2) + ", got '" +
                                      std::string(header[i]) + "'");
  }
  Dataset ds;
  ds.dimension = header.size() - 2;

  std::set<std::pair<std::string, std::string>> seen;
  while (detail::next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != header.size()) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty())
      throw ParseError(source, line_no, "empty subject or sample id");
    Template t{std::string(fields[0]), std::string(fields[1]), {}};
    t.features.reserve(ds.dimension);
    for (std::size_t i = 2; i < fields.size(); ++i) {
      const auto v = parse_real(fields[i]);
      if (!v) {
        throw ParseError(source, line_no,
                         "field f" + std::to_string(i - 2) + " is not a number: '" +
                             std::string(fields[i]) + "'");
      }
      if (!std::isfinite(*v))
        throw ParseError(source, line_no, "field f" + std::to_string(i - 2) + " is not finite");
      t.features.push_back(*v);
    }
    if (!seen.emplace(t.subject_id, t.sample_id).second) {
      throw ParseError(source, line_no,
                       "duplicate template (" + t.subject_id + ", " + t.sample_id + ")");
    }
    ds.templates.push_back(std::move(t));
  }
  if (ds.templates.empty()) throw ParseError(source, line_no, "no templates");
  const ValidationReport report = validate_dataset(ds);
  if (!report.ok()) {
    // Remaining violations are dataset-level (e.g. singleton subjects);
    // header line plus index locates the offending row.
    const Violation& v = report.violations.front();
    throw ParseError(source, v.template_index + 2, v.message);
  }
  return ds;
}

inline Dataset read_templates(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  return parse_templates(in, path.string());
}

inline void write_templates(const Dataset& ds, std::ostream& out) {
  out << "subject_id,sample_id";
  for (std::size_t i = 0; i < ds.dimension; ++i) out << ",f" << i;
  out << '\n';
  for (const Template& t : ds.templates) {
    out << t.subject_id << ',' << t.sample_id;
    for (double v : t.features) out << ',' << format_real(v);
    out << '\n';
  }
}

inline void write_templates(const Dataset& ds, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  write_templates(ds, out);
  detail::finish_output(out, path);
}

// ---------------------------------------------------------------------------
// DET points

inline void write_det_points(const DetCurve& curve, std::ostream& out) {
  out << "threshold,fmr,fnmr\n";
  for (const DetPoint& p : curve.points)
    out << format_real(p.threshold) << ',' << format_real(p.fmr) << ',' << format_real(p.fnmr)
        << '\n';
}

inline void write_det_points(const DetCurve& curve, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  write_det_points(curve, out);
  detail::finish_output(out, path);
}

inline DetCurve parse_det_points(std::istream& in, const std::string& source = "<input>") {
  std::string line;
  if (!detail::next_line(in, line) || line != "threshold,fmr,fnmr")
    throw ParseError(source, 1, "header must be threshold,fmr,fnmr");
  DetCurve curve;
  std::size_t line_no = 1;
  while (detail::next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 3) throw ParseError(source, line_no, "expected 3 fields");
    const auto t = parse_real(f[0]), fmr = parse_real(f[1]), fnmr = parse_real(f[2]);
    if (!t || !fmr || !fnmr) throw ParseError(source, line_no, "malformed number");
    curve.points.push_back({*t, *fmr, *fnmr});
  }
  return curve;
}

inline DetCurve read_det_points(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  return parse_det_points(in, path.string());
}

// ---------------------------------------------------------------------------
// Benchmark configuration

struct SchemeSpec {
  SchemeId scheme;
  SchemeParams params;
  friend bool operator==(const SchemeSpec&, const SchemeSpec&) = default;
};

struct BenchmarkConfig {
  std::vector<SchemeSpec> schemes;
  std::vector<Scenario> scenarios;
  std::uint64_t master_seed = 42;
  std::size_t unlinkability_bins = kDefaultUnlinkabilityBins;
  std::size_t mi_components = kDefaultMiComponents;
  std::variant<SynthConfig, std::filesystem::path> input = SynthConfig{};
  std::filesystem::path out_dir = "cbbench-out";
  unsigned threads = 0;

  void validate() const {
    if (schemes.empty()) throw ConfigError("config: at least one scheme is required");
    if (scenarios.empty()) throw ConfigError("config: at least one scenario is required");
    for (std::size_t i = 0; i < schemes.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (schemes[i].scheme == schemes[j].scheme)
          throw ConfigError("config: scheme '" + std::string(to_string(schemes[i].scheme)) +
                            "' listed twice");
    for (std::size_t i = 0; i < scenarios.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (scenarios[i] == scenarios[j])
          throw ConfigError("config: scenario '" + std::string(to_string(scenarios[i])) +
                            "' listed twice");
    for (const auto& s : schemes) {
      try {
        s.params.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError("config: " + std::string(to_string(s.scheme)) + ": " + e.what());
      }
    }
    if (unlinkability_bins < 10) throw ConfigError("config: unlinkability_bins must be >= 10");
    if (mi_components < 1) throw ConfigError("config: mi_components must be >= 1");
    if (const auto* synth = std::get_if<SynthConfig>(&input)) {
      try {
        synth->validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
      }
    }
  }
};

/// Six schemes at default parameters, all three scenarios, the standard
/// synthetic dataset (50 subjects x 6 samples, d = 128, sigma = 0.35).
inline BenchmarkConfig standard_config() {
  BenchmarkConfig cfg;
  for (SchemeId id : kAllSchemes) cfg.schemes.push_back({id, {}});
  cfg.scenarios.assign(kAllScenarios.begin(), kAllScenarios.end());
  return cfg;
}

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> known,
                                const std::string& where) {
  for (const auto& [k, _] : obj.items()) {
    bool ok = false;
    for (auto name : known) ok = ok || k == name;
    if (!ok) throw ConfigError("config: unknown key '" + k + "' in " + where);
  }
}

template <typename T>
T get_count(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned())
    throw ConfigError("config: " + where + "." + key + " must be a non-negative integer");
  return v.get<T>();
}

inline SchemeParams parse_params(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ConfigError("config: " + where + " must be an object");
  reject_unknown_keys(obj,
                      {"length", "iom_k", "iom_p", "mlp_layers", "bloom_word_bits",
                       "bloom_block_cols"},
                      where);
  SchemeParams p;
  p.length = get_count(obj, "length", p.length, where);
  p.iom_k = get_count(obj, "iom_k", p.iom_k, where);
  p.iom_p = get_count(obj, "iom_p", p.iom_p, where);
  p.mlp_layers = get_count(obj, "mlp_layers", p.mlp_layers, where);
  p.bloom_word_bits = get_count(obj, "bloom_word_bits", p.bloom_word_bits, where);
  p.bloom_block_cols = get_count(obj, "bloom_block_cols", p.bloom_block_cols, where);
  return p;
}

inline json params_to_json(const SchemeParams& p) {
  return {{"length", p.length},         {"iom_k", p.iom_k},
          {"iom_p", p.iom_p},           {"mlp_layers", p.mlp_layers},
          {"bloom_word_bits", p.bloom_word_bits}, {"bloom_block_cols", p.bloom_block_cols}};
}

inline SchemeId scheme_from_json(const json& v) {
  if (!v.is_string()) throw ConfigError("config: scheme name must be a string");
  const auto name = v.get<std::string>();
  const auto id = parse_scheme(name);
  if (!id) throw ConfigError("config: unknown scheme '" + name + "'");
  return *id;
}

inline SynthConfig parse_synth(const json& obj) {
  if (!obj.is_object()) throw ConfigError("config: input.synthetic must be an object");
  reject_unknown_keys(obj, {"subjects", "samples", "dim", "sigma", "seed"}, "input.synthetic");
  SynthConfig s;
  s.subjects = get_count(obj, "subjects", s.subjects, "input.synthetic");
  s.samples_per_subject = get_count(obj, "samples", s.samples_per_subject, "input.synthetic");
  s.dimension = get_count(obj, "dim", s.dimension, "input.synthetic");
  s.seed = get_count(obj, "seed", s.seed, "input.synthetic");
  if (obj.contains("sigma")) {
    if (!obj.at("sigma").is_number()) throw ConfigError("config: input.synthetic.sigma must be a number");
    s.noise_sigma = obj.at("sigma").get<double>();
  }
  return s;
}

}  // namespace detail

/// Relative template paths resolve against `base_dir`.
inline BenchmarkConfig parse_config(const nlohmann::json& doc,
                                    const std::filesystem::path& base_dir = {}) {
  using detail::json;
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  detail::reject_unknown_keys(doc,
                              {"schemes", "scenarios", "master_seed", "unlinkability_bins",
                               "mi_components", "input", "out_dir", "threads"},
                              "config");
  BenchmarkConfig cfg = standard_config();

  if (doc.contains("schemes")) {
    const json& list = doc.at("schemes");
    if (!list.is_array()) throw ConfigError("config: schemes must be an array");
    cfg.schemes.clear();
    for (const json& entry : list) {
      if (entry.is_string()) {
        cfg.schemes.push_back({detail::scheme_from_json(entry), {}});
      } else if (entry.is_object()) {
        detail::reject_unknown_keys(entry, {"name", "params"}, "schemes[]");
        if (!entry.contains("name")) throw ConfigError("config: scheme entry without name");
        SchemeSpec spec{detail::scheme_from_json(entry.at("name")), {}};
        if (entry.contains("params"))
          spec.params = detail::parse_params(entry.at("params"), std::string(to_string(spec.scheme)));
        cfg.schemes.push_back(spec);
      } else {
        throw ConfigError("config: scheme entries must be names or objects");
      }
    }
  }
  if (doc.contains("scenarios")) {
    const json& list = doc.at("scenarios");
    if (!list.is_array()) throw ConfigError("config: scenarios must be an array");
    cfg.scenarios.clear();
    for (const json& entry : list) {
      if (!entry.is_string()) throw ConfigError("config: scenario names must be strings");
      const auto name = entry.get<std::string>();
      const auto s = parse_scenario(name);
      if (!s) throw ConfigError("config: unknown scenario '" + name + "'");
      cfg.scenarios.push_back(*s);
    }
  }
  cfg.master_seed = detail::get_count(doc, "master_seed", cfg.master_seed, "config");
  cfg.unlinkability_bins =
      detail::get_count(doc, "unlinkability_bins", cfg.unlinkability_bins, "config");
  cfg.mi_components = detail::get_count(doc, "mi_components", cfg.mi_components, "config");
  cfg.threads = detail::get_count(doc, "threads", cfg.threads, "config");
  if (doc.contains("input")) {
    const json& in = doc.at("input");
    if (!in.is_object()) throw ConfigError("config: input must be an object");
    detail::reject_unknown_keys(in, {"synthetic", "templates"}, "input");
    if (in.contains("synthetic") == in.contains("templates"))
      throw ConfigError("config: input needs exactly one of 'synthetic' or 'templates'");
    if (in.contains("synthetic")) {
      cfg.input = detail::parse_synth(in.at("synthetic"));
    } else {
      if (!in.at("templates").is_string()) throw ConfigError("config: input.templates must be a path");
      std::filesystem::path p = in.at("templates").get<std::string>();
      cfg.input = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
  }
  if (doc.contains("out_dir")) {
    if (!doc.at("out_dir").is_string()) throw ConfigError("config: out_dir must be a path");
    std::filesystem::path p = doc.at("out_dir").get<std::string>();
    cfg.out_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  cfg.validate();
  return cfg;
}

inline BenchmarkConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

inline nlohmann::json config_to_json(const BenchmarkConfig& cfg) {
  using detail::json;
  json schemes = json::array();
  for (const auto& s : cfg.schemes)
    schemes.push_back({{"name", to_string(s.scheme)}, {"params", detail::params_to_json(s.params)}});
  json scenarios = json::array();
  for (Scenario s : cfg.scenarios) scenarios.push_back(to_string(s));
  json input;
  if (const auto* synth = std::get_if<SynthConfig>(&cfg.input)) {
    input["synthetic"] = {{"subjects", synth->subjects},
                          {"samples", synth->samples_per_subject},
                          {"dim", synth->dimension},
                          {"sigma", synth->noise_sigma},
                          {"seed", synth->seed}};
  } else {
    input["templates"] = std::get<std::filesystem::path>(cfg.input).string();
  }
  return {{"schemes", schemes},
          {"scenarios", scenarios},
          {"master_seed", cfg.master_seed},
          {"unlinkability_bins", cfg.unlinkability_bins},
          {"mi_components", cfg.mi_components},
          {"input", input},
          {"out_dir", cfg.out_dir.string()}};
}

// ---------------------------------------------------------------------------
// Benchmark report

struct PerformanceSummary {
  double eer = 0.0;
  double fnmr_at_fmr_1pct = 0.0;
  double fnmr_at_fmr_0p1pct = 0.0;
};

inline PerformanceSummary summarize(const DetCurve& curve) {
  return {eer(curve), fnmr_at_fmr(curve, 0.01), fnmr_at_fmr(curve, 0.001)};
}

struct CellReport {
  SchemeId scheme;
  Scenario scenario;
  std::size_t template_bits = 0;    // realized storage length
  std::size_t effective_bits = 0;   // distinct template-derived bits
  std::size_t mated_count = 0;
  std::size_t nonmated_count = 0;
  std::optional<PerformanceSummary> performance;
  std::string det_file;  // relative to the output directory
  std::optional<UnlinkabilityReport> unlinkability;
  std::optional<IrreversibilityReport> irreversibility;
};

struct DatasetSummary {
  std::size_t subjects = 0;
  std::size_t templates = 0;
  std::size_t dimension = 0;
  std::size_t mated_pairs = 0;
  std::size_t nonmated_pairs = 0;
};

struct BenchmarkReport {
  std::string toolkit_version;
  std::string timestamp;  // ISO 8601 UTC
  BenchmarkConfig config;
  DatasetSummary dataset;
  PerformanceSummary unprotected;
  std::string unprotected_det_file;
  std::vector<CellReport> cells;  // sorted by scheme, then scenario
};

inline nlohmann::json report_to_json(const BenchmarkReport& report) {
  using detail::json;
  json cells = json::array();
  for (const CellReport& c : report.cells) {
    json cell = {{"scheme", to_string(c.scheme)},
                 {"scenario", to_string(c.scenario)},
                 {"template_bits", c.template_bits},
                 {"effective_bits", c.effective_bits},
                 {"mated_count", c.mated_count},
                 {"nonmated_count", c.nonmated_count}};
    if (c.performance) {
      cell["eer"] = c.performance->eer;
      cell["fnmr_at_fmr_1pct"] = c.performance->fnmr_at_fmr_1pct;
      cell["fnmr_at_fmr_0p1pct"] = c.performance->fnmr_at_fmr_0p1pct;
      cell["det_file"] = c.det_file;
    }
    if (c.unlinkability) {
      cell["d_sys"] = c.unlinkability->d_sys;
      cell["unlinkability_bins"] = c.unlinkability->bin_count;
      cell["unlinkability_degenerate"] = c.unlinkability->degenerate;
    }
    if (c.irreversibility) {
      const auto& m = *c.irreversibility;
      cell["mi"] = m.mi;
      cell["h_x"] = m.h_x;
      cell["h_y"] = m.h_y;
      cell["h_joint"] = m.h_joint;
      cell["r_used"] = m.r_used;
      cell["r_shrunk"] = m.r_shrunk;
      cell["near_deterministic"] = m.near_deterministic;
    }
    cells.push_back(std::move(cell));
  }
  return {{"toolkit", "cbbench"},
          {"version", report.toolkit_version},
          {"timestamp", report.timestamp},
          {"entropy_units", "nats"},
          {"config", config_to_json(report.config)},
          {"dataset",
           {{"subjects", report.dataset.subjects},
            {"templates", report.dataset.templates},
            {"dimension", report.dataset.dimension},
            {"mated_pairs", report.dataset.mated_pairs},
            {"nonmated_pairs", report.dataset.nonmated_pairs}}},
          {"unprotected",
           {{"eer", report.unprotected.eer},
            {"fnmr_at_fmr_1pct", report.unprotected.fnmr_at_fmr_1pct},
            {"fnmr_at_fmr_0p1pct", report.unprotected.fnmr_at_fmr_0p1pct},
            {"det_file", report.unprotected_det_file}}},
          {"cells", cells}};
}

inline void write_report(const BenchmarkReport& report, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  out << report_to_json(report).dump(2) << '\n';
  detail::finish_output(out, path);
}

}  // namespace cbbench
