#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "freshcache/analysis.hpp"
#include "freshcache/coupon.hpp"
#include "freshcache/model.hpp"
#include "freshcache/policy.hpp"
#include "freshcache/simulator.hpp"
#include "freshcache/version.hpp"

// Experiment runner: JSON config in, CSV + gnuplot script + run manifest
// out.  Configs are parsed fail-closed (any key outside the experiment's
// schema is an error naming the key), numeric output is formatted with a
// fixed printf format, and all randomness derives from the config seed,
// so rerunning a config overwrites its outputs byte for byte.

namespace freshcache {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
  HitVsBeta,
  HitVsF,
  HitRatePerContent,
  Approx1Error,
  CharTimeCv,
  TailBounds,
  ZipfConvergence
};

struct ExperimentInfo {
  ExperimentKind kind;
  const char* name;
  const char* slug; // default output file stem
  const char* blurb;
};

inline const std::vector<ExperimentInfo>& experiment_infos() {
  static const std::vector<ExperimentInfo> table = {
      {ExperimentKind::HitVsBeta, "HitVsBeta", "hit_vs_beta",
       "aggregate hit probability vs Zipf beta, one series per policy"},
      {ExperimentKind::HitVsF, "HitVsF", "hit_vs_f",
       "aggregate hit probability vs uniform freshness F, one series per policy"},
      {ExperimentKind::HitRatePerContent, "HitRatePerContent", "hit_rate_per_content",
       "per-content LRU and M-LRU hit rates against the characteristic-time approximation"},
      {ExperimentKind::Approx1Error, "Approx1Error", "approx1_error",
       "relative error of replacing the per-content eviction time with t_c"},
      {ExperimentKind::CharTimeCv, "CharTimeCv", "char_time_cv",
       "coefficient of variation of the per-content eviction time across catalog sizes"},
      {ExperimentKind::TailBounds, "TailBounds", "tail_bounds",
       "empirical waiting-time tail frequencies against the concentration bounds"},
      {ExperimentKind::ZipfConvergence, "ZipfConvergence", "zipf_convergence",
       "probability that the first ceil(n^e) requests are all distinct, across n"},
  };
  return table;
}

inline const ExperimentInfo& experiment_info(ExperimentKind k) {
  for (const auto& row : experiment_infos())
    if (row.kind == k) return row;
  throw std::logic_error("unmapped experiment kind");
}

inline ExperimentKind experiment_from_name(const std::string& name) {
  for (const auto& row : experiment_infos())
    if (name == row.name) return row.kind;
  std::string valid;
  for (const auto& row : experiment_infos()) {
    if (!valid.empty()) valid += ", ";
    valid += row.name;
  }
  throw ConfigError("unknown experiment \"" + name + "\" (valid: " + valid + ")");
}

enum class Series { LP, LRU, MLP, MLRU, LEH, UpperBound };

inline const char* series_name(Series s) {
  switch (s) {
    case Series::LP: return "LP";
    case Series::LRU: return "LRU";
    case Series::MLP: return "MLP";
    case Series::MLRU: return "MLRU";
    case Series::LEH: return "LEH";
    case Series::UpperBound: return "UpperBound";
  }
  return "?";
}

inline Series series_from_name(const std::string& name) {
  for (Series s : {Series::LP, Series::LRU, Series::MLP, Series::MLRU, Series::LEH,
                   Series::UpperBound})
    if (name == series_name(s)) return s;
  throw ConfigError("unknown policy \"" + name +
                    "\" (valid: LP, LRU, MLP, MLRU, LEH, UpperBound)");
}

inline PolicyKind series_policy(Series s) {
  switch (s) {
    case Series::LP: return PolicyKind::LP;
    case Series::LRU: return PolicyKind::LRU;
    case Series::MLP: return PolicyKind::MLP;
    case Series::MLRU: return PolicyKind::MLRU;
    case Series::LEH: return PolicyKind::LEH;
    case Series::UpperBound: break;
  }
  throw std::logic_error("UpperBound is analytic, not a simulated policy");
}

struct FreshnessSpec {
  FreshnessKind kind = FreshnessKind::Uniform;
  std::uint64_t f = 0;     // uniform
  std::uint64_t slope = 1; // linear
  std::vector<std::uint64_t> values;

  FreshnessProfile materialize(ContentId n) const {
    switch (kind) {
      case FreshnessKind::Uniform: return FreshnessProfile::uniform(n, f);
      case FreshnessKind::Linear: return FreshnessProfile::linear(n, slope);
      case FreshnessKind::Explicit: {
        if (values.size() != n)
          throw ConfigError("freshness.values length must equal n");
        return FreshnessProfile::explicit_values(values);
      }
    }
    throw std::logic_error("unmapped freshness kind");
  }

  const char* kind_name() const {
    switch (kind) {
      case FreshnessKind::Uniform: return "uniform";
      case FreshnessKind::Linear: return "linear";
      case FreshnessKind::Explicit: return "explicit";
    }
    return "?";
  }
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::HitVsBeta;
  std::string name; // output file stem; defaults to the experiment slug

  ContentId n = 0;
  std::uint64_t m = 0;
  double beta = 0.0;
  FreshnessSpec freshness;

  std::vector<double> beta_grid;
  std::vector<std::uint64_t> f_grid;
  std::vector<ContentId> n_grid;
  std::vector<ContentId> contents;
  std::vector<double> delta_grid;
  double m_ratio = 0.1;
  std::string m_scaling = "sqrt"; // linear | sqrt | log
  double m_exponent = 0.2;

  std::uint64_t slots = 1'000'000;
  std::optional<std::uint64_t> warmup; // empty: simulator default
  std::uint32_t replications = 10;
  std::uint64_t seed = 42;
  std::uint64_t samples = 100'000; // per waiting-time statistic

  std::vector<Series> series;
  std::string out_dir; // empty until resolved by the caller
};

namespace detail {

// ceil(ratio * n) with the product snapped to the nearest integer first,
// so 0.1 * 250 lands on 25 and not 26.
inline std::uint64_t scaled_cache_size(std::uint64_t n, double ratio) {
  long double x = static_cast<long double>(ratio) * static_cast<long double>(n);
  std::uint64_t m;
  if (std::fabs(static_cast<double>(x - std::roundl(x))) < 1e-9)
    m = static_cast<std::uint64_t>(std::roundl(x));
  else
    m = static_cast<std::uint64_t>(std::ceil(x));
  return std::max<std::uint64_t>(m, 1);
}

inline std::uint64_t scaling_cache_size(const std::string& scaling, std::uint64_t n,
                                        double ratio) {
  if (scaling == "linear") return scaled_cache_size(n, ratio);
  if (scaling == "sqrt") return power_law_cache_size(n, 0.5);
  if (scaling == "log") {
    long double x = std::log(static_cast<long double>(n));
    return std::max<std::uint64_t>(static_cast<std::uint64_t>(std::ceil(x)), 1);
  }
  throw ConfigError("unknown m_scaling \"" + scaling + "\" (valid: linear, sqrt, log)");
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string fmt(std::uint64_t v) { return std::to_string(v); }

inline const std::vector<double>& default_beta_grid() {
  // 0 to 0.5 at 0.05 (the zoomed low-beta range where the policies
  // separate), then 0.6 to 2.0 at 0.1.
  static const std::vector<double> grid = [] {
    std::vector<double> g;
    for (int k = 0; k <= 10; ++k) g.push_back(k / 20.0);
    for (int k = 6; k <= 20; ++k) g.push_back(k / 10.0);
    return g;
  }();
  return grid;
}

} // namespace detail

// ---------------------------------------------------------------------
// Config parsing (fail-closed)

namespace detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                                const std::string& prefix) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown config key \"" + prefix + it.key() + "\"");
}

inline double as_real(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key \"" + key + "\" must be a number");
  return v.get<double>();
}

inline std::uint64_t as_uint(const json& v, const std::string& key) {
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0))
    throw ConfigError("config key \"" + key + "\" must be a non-negative integer");
  return v.get<std::uint64_t>();
}

inline std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config key \"" + key + "\" must be a string");
  return v.get<std::string>();
}

template <class T, class F>
inline std::vector<T> as_array(const json& v, const std::string& key, F&& element) {
  if (!v.is_array() || v.empty())
    throw ConfigError("config key \"" + key + "\" must be a non-empty array");
  std::vector<T> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(element(e, key));
  return out;
}

inline FreshnessSpec parse_freshness(const json& v) {
  if (!v.is_object()) throw ConfigError("config key \"freshness\" must be an object");
  reject_unknown_keys(v, {"kind", "F", "slope", "values"}, "freshness.");
  if (!v.contains("kind")) throw ConfigError("missing required key \"freshness.kind\"");
  std::string kind = as_string(v.at("kind"), "freshness.kind");
  FreshnessSpec fs;
  if (kind == "uniform") {
    fs.kind = FreshnessKind::Uniform;
    if (!v.contains("F")) throw ConfigError("missing required key \"freshness.F\"");
    fs.f = as_uint(v.at("F"), "freshness.F");
    if (v.contains("slope") || v.contains("values"))
      throw ConfigError("freshness kind \"uniform\" takes only \"F\"");
  } else if (kind == "linear") {
    fs.kind = FreshnessKind::Linear;
    fs.slope = v.contains("slope") ? as_uint(v.at("slope"), "freshness.slope") : 1;
    if (v.contains("F") || v.contains("values"))
      throw ConfigError("freshness kind \"linear\" takes only \"slope\"");
  } else if (kind == "explicit") {
    fs.kind = FreshnessKind::Explicit;
    if (!v.contains("values")) throw ConfigError("missing required key \"freshness.values\"");
    fs.values = as_array<std::uint64_t>(v.at("values"), "freshness.values", as_uint);
    if (v.contains("F") || v.contains("slope"))
      throw ConfigError("freshness kind \"explicit\" takes only \"values\"");
  } else {
    throw ConfigError("unknown freshness kind \"" + kind +
                      "\" (valid: uniform, linear, explicit)");
  }
  return fs;
}

inline std::vector<Series> parse_policies(const json& v) {
  auto names = as_array<std::string>(v, "policies", as_string);
  std::vector<Series> out;
  std::set<std::string> seen;
  for (const auto& s : names) {
    if (!seen.insert(s).second) throw ConfigError("duplicate policy \"" + s + "\"");
    out.push_back(series_from_name(s));
  }
  return out;
}

} // namespace detail

inline void validate(const ExperimentSpec& spec);

inline ExperimentSpec parse_config(const std::string& text) {
  using detail::as_real;
  using detail::as_string;
  using detail::as_uint;
  using nlohmann::json;

  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  if (!doc.contains("experiment")) throw ConfigError("missing required key \"experiment\"");

  ExperimentSpec spec;
  spec.kind = experiment_from_name(as_string(doc.at("experiment"), "experiment"));

  // Keys every experiment accepts, then the per-kind extras.
  std::set<std::string> allowed = {"experiment", "name",         "slots", "warmup",
                                   "replications", "seed",       "out",   "samples"};
  std::set<std::string> required;
  switch (spec.kind) {
    case ExperimentKind::HitVsBeta:
      allowed.insert({"n", "m", "freshness", "beta_grid", "policies"});
      required = {"n", "m", "freshness"};
      break;
    case ExperimentKind::HitVsF:
      allowed.insert({"n", "m", "beta", "f_grid", "policies"});
      required = {"n", "m", "beta"};
      break;
    case ExperimentKind::HitRatePerContent:
      allowed.insert({"n", "m", "freshness", "beta_grid", "contents", "policies"});
      required = {"n", "m", "freshness"};
      break;
    case ExperimentKind::Approx1Error:
      allowed.insert({"n_grid", "beta_grid", "m_ratio", "contents"});
      required = {"n_grid"};
      break;
    case ExperimentKind::CharTimeCv:
      allowed.insert({"n_grid", "beta_grid", "m_scaling", "m_ratio", "contents"});
      required = {"n_grid"};
      break;
    case ExperimentKind::TailBounds:
      allowed.insert({"n", "m", "delta_grid"});
      required = {"n", "m"};
      break;
    case ExperimentKind::ZipfConvergence:
      allowed.insert({"beta", "n_grid", "m_exponent"});
      required = {"beta", "n_grid"};
      break;
  }
  detail::reject_unknown_keys(doc, allowed, "");
  for (const auto& key : required)
    if (!doc.contains(key))
      throw ConfigError("missing required key \"" + key + "\" for experiment " +
                        experiment_info(spec.kind).name);

  if (doc.contains("name")) spec.name = as_string(doc.at("name"), "name");
  if (spec.name.empty()) spec.name = experiment_info(spec.kind).slug;
  if (doc.contains("n")) spec.n = static_cast<ContentId>(as_uint(doc.at("n"), "n"));
  if (doc.contains("m")) spec.m = as_uint(doc.at("m"), "m");
  if (doc.contains("beta")) spec.beta = as_real(doc.at("beta"), "beta");
  if (doc.contains("freshness")) spec.freshness = detail::parse_freshness(doc.at("freshness"));
  if (doc.contains("beta_grid"))
    spec.beta_grid = detail::as_array<double>(doc.at("beta_grid"), "beta_grid", as_real);
  if (doc.contains("f_grid"))
    spec.f_grid = detail::as_array<std::uint64_t>(doc.at("f_grid"), "f_grid", as_uint);
  if (doc.contains("n_grid")) {
    auto raw = detail::as_array<std::uint64_t>(doc.at("n_grid"), "n_grid", as_uint);
    for (auto v : raw) spec.n_grid.push_back(static_cast<ContentId>(v));
  }
  if (doc.contains("contents")) {
    auto raw = detail::as_array<std::uint64_t>(doc.at("contents"), "contents", as_uint);
    for (auto v : raw) spec.contents.push_back(static_cast<ContentId>(v));
  }
  if (doc.contains("delta_grid"))
    spec.delta_grid = detail::as_array<double>(doc.at("delta_grid"), "delta_grid", as_real);
  if (doc.contains("m_ratio")) spec.m_ratio = as_real(doc.at("m_ratio"), "m_ratio");
  if (doc.contains("m_scaling")) spec.m_scaling = as_string(doc.at("m_scaling"), "m_scaling");
  if (doc.contains("m_exponent")) spec.m_exponent = as_real(doc.at("m_exponent"), "m_exponent");
  if (doc.contains("slots")) spec.slots = as_uint(doc.at("slots"), "slots");
  if (doc.contains("warmup")) spec.warmup = as_uint(doc.at("warmup"), "warmup");
  if (doc.contains("replications"))
    spec.replications = static_cast<std::uint32_t>(as_uint(doc.at("replications"), "replications"));
  if (doc.contains("seed")) spec.seed = as_uint(doc.at("seed"), "seed");
  if (doc.contains("samples")) spec.samples = as_uint(doc.at("samples"), "samples");
  if (doc.contains("policies")) spec.series = detail::parse_policies(doc.at("policies"));
  if (doc.contains("out")) spec.out_dir = as_string(doc.at("out"), "out");

  // Grid and series defaults, per experiment.
  switch (spec.kind) {
    case ExperimentKind::HitVsBeta:
      if (spec.beta_grid.empty()) spec.beta_grid = detail::default_beta_grid();
      if (spec.series.empty())
        spec.series = {Series::LP,  Series::LRU, Series::MLP,
                       Series::MLRU, Series::LEH, Series::UpperBound};
      break;
    case ExperimentKind::HitVsF:
      if (spec.f_grid.empty()) spec.f_grid = {2, 5, 10, 20, 50, 100, 200, 500};
      if (spec.series.empty())
        spec.series = {Series::LP,  Series::LRU, Series::MLP,
                       Series::MLRU, Series::LEH, Series::UpperBound};
      spec.freshness.kind = FreshnessKind::Uniform; // F comes from the grid
      break;
    case ExperimentKind::HitRatePerContent:
      if (spec.beta_grid.empty()) spec.beta_grid = detail::default_beta_grid();
      if (spec.series.empty()) spec.series = {Series::LRU, Series::MLRU};
      if (spec.contents.empty()) {
        spec.contents = {1};
        if (spec.n >= 10) spec.contents.push_back(std::min<ContentId>(10, spec.n));
        if (spec.n > 1) spec.contents.push_back(spec.n);
      }
      break;
    case ExperimentKind::Approx1Error:
      if (spec.beta_grid.empty()) spec.beta_grid = {0.5, 1.0, 1.5};
      if (spec.contents.empty()) spec.contents = {1};
      break;
    case ExperimentKind::CharTimeCv:
      if (spec.beta_grid.empty()) spec.beta_grid = {0.5, 1.5};
      if (spec.contents.empty()) spec.contents = {1};
      break;
    case ExperimentKind::TailBounds:
      if (spec.delta_grid.empty()) spec.delta_grid = {0.1, 0.2, 0.3, 0.5};
      break;
    case ExperimentKind::ZipfConvergence:
      break;
  }

  validate(spec);
  return spec;
}

inline void validate(const ExperimentSpec& spec) {
  auto need_sim_params = [&] {
    if (spec.n < 1) throw ConfigError("n must be at least 1");
    if (spec.m < 1) throw ConfigError("m must be at least 1");
    if (spec.m > spec.n) throw ConfigError("m must not exceed n");
    if (spec.slots < 1) throw ConfigError("slots must be at least 1");
    if (spec.replications < 1) throw ConfigError("replications must be at least 1");
    if (spec.warmup && *spec.warmup >= spec.slots)
      throw ConfigError("warmup must leave at least one counted slot");
  };
  auto need_betas = [&](const std::vector<double>& grid) {
    if (grid.empty()) throw ConfigError("beta grid must be non-empty");
    for (double b : grid)
      if (!std::isfinite(b) || b < 0.0) throw ConfigError("beta values must be finite and >= 0");
  };
  auto need_contents = [&](ContentId n) {
    if (spec.contents.empty()) throw ConfigError("contents must be non-empty");
    for (ContentId c : spec.contents)
      if (c < 1 || c > n) throw ConfigError("contents must lie in 1..n");
  };
  auto need_samples = [&] {
    if (spec.samples < 1) throw ConfigError("samples must be at least 1");
  };

  switch (spec.kind) {
    case ExperimentKind::HitVsBeta:
      need_sim_params();
      need_betas(spec.beta_grid);
      if (spec.series.empty()) throw ConfigError("policies must be non-empty");
      spec.freshness.materialize(spec.n); // validates F values
      break;
    case ExperimentKind::HitVsF:
      need_sim_params();
      if (!std::isfinite(spec.beta) || spec.beta < 0.0)
        throw ConfigError("beta must be finite and >= 0");
      if (spec.f_grid.empty()) throw ConfigError("f_grid must be non-empty");
      for (auto f : spec.f_grid)
        if (f < 1) throw ConfigError("f_grid values must be at least 1");
      if (spec.series.empty()) throw ConfigError("policies must be non-empty");
      break;
    case ExperimentKind::HitRatePerContent: {
      need_sim_params();
      if (spec.m >= spec.n)
        throw ConfigError("m must be smaller than n (the characteristic time needs m < n)");
      need_betas(spec.beta_grid);
      need_contents(spec.n);
      need_samples();
      for (Series s : spec.series)
        if (s != Series::LRU && s != Series::MLRU)
          throw ConfigError(
              "HitRatePerContent simulates recency policies only (valid: LRU, MLRU); "
              "the approximation and upper bound series are always written");
      spec.freshness.materialize(spec.n);
      break;
    }
    case ExperimentKind::Approx1Error: {
      if (spec.n_grid.empty()) throw ConfigError("n_grid must be non-empty");
      need_betas(spec.beta_grid);
      if (!(spec.m_ratio > 0.0 && spec.m_ratio < 1.0))
        throw ConfigError("m_ratio must lie in (0, 1)");
      need_samples();
      if (spec.contents.empty()) throw ConfigError("contents must be non-empty");
      for (ContentId n : spec.n_grid) {
        std::uint64_t m = detail::scaled_cache_size(n, spec.m_ratio);
        if (m >= n) throw ConfigError("m_ratio gives m >= n at n = " + std::to_string(n));
        for (ContentId c : spec.contents)
          if (c < 1 || c > n) throw ConfigError("contents must lie in 1..n for every grid n");
      }
      break;
    }
    case ExperimentKind::CharTimeCv: {
      if (spec.n_grid.empty()) throw ConfigError("n_grid must be non-empty");
      need_betas(spec.beta_grid);
      need_samples();
      if (spec.contents.empty()) throw ConfigError("contents must be non-empty");
      for (ContentId n : spec.n_grid) {
        std::uint64_t m = detail::scaling_cache_size(spec.m_scaling, n, spec.m_ratio);
        if (m > static_cast<std::uint64_t>(n) - 1)
          throw ConfigError("m scaling gives m > n - 1 at n = " + std::to_string(n));
        for (ContentId c : spec.contents)
          if (c < 1 || c > n) throw ConfigError("contents must lie in 1..n for every grid n");
      }
      break;
    }
    case ExperimentKind::TailBounds:
      if (spec.n < 2 || spec.m < 1 || spec.m >= spec.n)
        throw ConfigError("tail bounds need 1 <= m < n");
      if (spec.delta_grid.empty()) throw ConfigError("delta_grid must be non-empty");
      for (double d : spec.delta_grid)
        if (!(d > 0.0)) throw ConfigError("delta values must be positive");
      need_samples();
      break;
    case ExperimentKind::ZipfConvergence: {
      if (!(spec.beta >= 0.0 && spec.beta < 1.0))
        throw ConfigError("ZipfConvergence needs beta in [0, 1)");
      double limit = (1.0 - spec.beta) / (2.0 - spec.beta);
      if (!(spec.m_exponent > 0.0 && spec.m_exponent < limit))
        throw ConfigError("m_exponent must lie in (0, " + std::to_string(limit) +
                          ") for beta = " + std::to_string(spec.beta) +
                          " (outside the convergence hypothesis)");
      if (spec.n_grid.empty()) throw ConfigError("n_grid must be non-empty");
      for (ContentId n : spec.n_grid)
        if (n < 1) throw ConfigError("n_grid values must be at least 1");
      need_samples();
      break;
    }
  }
}

// ---------------------------------------------------------------------
// Output writing

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::string csv_text(const std::string& header, const std::vector<std::string>& rows) {
  std::string text = header;
  text += '\n';
  for (const auto& r : rows) {
    text += r;
    text += '\n';
  }
  return text;
}

// gnuplot preamble shared by all scripts; output lands next to the CSV.
inline std::string gp_prelude(const std::string& stem, const std::string& xlabel,
                              const std::string& ylabel) {
  std::string s;
  s += "set datafile separator ','\n";
  s += "set terminal pngcairo size 960,640\n";
  s += "set output '" + stem + ".png'\n";
  s += "set xlabel '" + xlabel + "'\n";
  s += "set ylabel '" + ylabel + "'\n";
  s += "set grid\n";
  s += "set key outside right\n";
  return s;
}

inline std::string series_word_list(const std::vector<Series>& series) {
  std::string s;
  for (Series x : series) {
    if (!s.empty()) s += ' ';
    s += series_name(x);
  }
  return s;
}

} // namespace detail

// Runs the experiment and writes <name>.csv, <name>.gp and
// <name>.manifest.json into spec.out_dir.  Returns the written paths.
// Progress goes to stderr; results only to files.
inline std::vector<std::string> run_experiment(const ExperimentSpec& spec, unsigned threads = 1) {
  namespace fs = std::filesystem;
  using detail::fmt;

  validate(spec);
  if (spec.out_dir.empty())
    throw ConfigError("output directory not set (config \"out\", --out, or environment)");
  fs::path dir(spec.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string());

  const ExperimentInfo& info = experiment_info(spec.kind);
  const std::string stem = spec.name;
  fs::path csv_path = dir / (stem + ".csv");
  fs::path gp_path = dir / (stem + ".gp");
  fs::path manifest_path = dir / (stem + ".manifest.json");

  std::string header;
  std::vector<std::string> rows;
  std::string gp;

  auto progress = [&](std::size_t done, std::size_t total) {
    std::cerr << "[freshcache] " << info.name << ": " << done << "/" << total << " grid points\n";
  };

  switch (spec.kind) {
    case ExperimentKind::HitVsBeta: {
      header = "beta,policy,hit_prob,stderr,n,m,F_kind,seed";
      FreshnessProfile prof = spec.freshness.materialize(spec.n);
      for (std::size_t b = 0; b < spec.beta_grid.size(); ++b) {
        double beta = spec.beta_grid[b];
        std::uint64_t point_seed = derive_seed(spec.seed, b);
        for (Series s : spec.series) {
          double value, se;
          if (s == Series::UpperBound) {
            value = upper_bound_hit_prob(build_zipf(spec.n, beta), prof);
            se = 0.0;
          } else {
            SimConfig cfg;
            cfg.n = spec.n;
            cfg.m = spec.m;
            cfg.beta = beta;
            cfg.profile = prof;
            cfg.kind = series_policy(s);
            cfg.slots = spec.slots;
            cfg.warmup_slots = spec.warmup;
            cfg.replications = spec.replications;
            cfg.master_seed = point_seed;
            SimulationMetrics metrics = run(cfg, threads);
            value = metrics.hit_prob;
            se = metrics.hit_prob_stderr;
          }
          rows.push_back(fmt(beta) + "," + series_name(s) + "," + fmt(value) + "," + fmt(se) +
                         "," + fmt(std::uint64_t(spec.n)) + "," + fmt(spec.m) + "," +
                         spec.freshness.kind_name() + "," + fmt(spec.seed));
        }
        progress(b + 1, spec.beta_grid.size());
      }
      gp = detail::gp_prelude(stem, "beta", "aggregate hit probability");
      gp += "plot for [s in \"" + detail::series_word_list(spec.series) + "\"] '" + stem +
            ".csv' every ::1 using 1:(strcol(2) eq s ? column(3) : 1/0) with linespoints title s\n";
      break;
    }

    case ExperimentKind::HitVsF: {
      header = "F,policy,hit_prob,stderr,n,m,beta,F_kind,seed";
      for (std::size_t fi = 0; fi < spec.f_grid.size(); ++fi) {
        std::uint64_t f = spec.f_grid[fi];
        FreshnessProfile prof = FreshnessProfile::uniform(spec.n, f);
        std::uint64_t point_seed = derive_seed(spec.seed, fi);
        for (Series s : spec.series) {
          double value, se;
          if (s == Series::UpperBound) {
            value = upper_bound_hit_prob(build_zipf(spec.n, spec.beta), prof);
            se = 0.0;
          } else {
            SimConfig cfg;
            cfg.n = spec.n;
            cfg.m = spec.m;
            cfg.beta = spec.beta;
            cfg.profile = prof;
            cfg.kind = series_policy(s);
            cfg.slots = spec.slots;
            cfg.warmup_slots = spec.warmup;
            cfg.replications = spec.replications;
            cfg.master_seed = point_seed;
            SimulationMetrics metrics = run(cfg, threads);
            value = metrics.hit_prob;
            se = metrics.hit_prob_stderr;
          }
          rows.push_back(fmt(f) + "," + series_name(s) + "," + fmt(value) + "," + fmt(se) + "," +
                         fmt(std::uint64_t(spec.n)) + "," + fmt(spec.m) + "," + fmt(spec.beta) +
                         ",uniform," + fmt(spec.seed));
        }
        progress(fi + 1, spec.f_grid.size());
      }
      gp = detail::gp_prelude(stem, "freshness demand F", "aggregate hit probability");
      gp += "set logscale x\n";
      gp += "plot for [s in \"" + detail::series_word_list(spec.series) + "\"] '" + stem +
            ".csv' every ::1 using 1:(strcol(2) eq s ? column(3) : 1/0) with linespoints title s\n";
      break;
    }

    case ExperimentKind::HitRatePerContent: {
      header = "beta,content,series,hit_rate,stderr,n,m,F_kind,seed";
      FreshnessProfile prof = spec.freshness.materialize(spec.n);
      for (std::size_t b = 0; b < spec.beta_grid.size(); ++b) {
        double beta = spec.beta_grid[b];
        std::uint64_t point_seed = derive_seed(spec.seed, b);
        PopularityModel model = build_zipf(spec.n, beta);
        auto echo = [&](ContentId c, const std::string& series, double rate, double se) {
          rows.push_back(fmt(beta) + "," + fmt(std::uint64_t(c)) + "," + series + "," +
                         fmt(rate) + "," + fmt(se) + "," + fmt(std::uint64_t(spec.n)) + "," +
                         fmt(spec.m) + "," + spec.freshness.kind_name() + "," + fmt(spec.seed));
        };
        for (Series s : spec.series) {
          SimConfig cfg;
          cfg.n = spec.n;
          cfg.m = spec.m;
          cfg.beta = beta;
          cfg.profile = prof;
          cfg.kind = series_policy(s);
          cfg.slots = spec.slots;
          cfg.warmup_slots = spec.warmup;
          cfg.replications = spec.replications;
          cfg.master_seed = point_seed;
          SimulationMetrics metrics = run(cfg, threads);
          for (ContentId c : spec.contents) {
            auto r = metrics.hit_rate(c);
            double rate = r ? *r : std::nan("");
            double se = 0.0;
            if (r && metrics.requests[c - 1] > 0)
              se = std::sqrt(*r * (1.0 - *r) / static_cast<double>(metrics.requests[c - 1]));
            echo(c, series_name(s), rate, se);
          }
        }
        // Approximation and ceiling series are analytic except for the
        // Monte Carlo characteristic time.
        SplitMix64 tc_rng(derive_seed(point_seed, 1'000'003));
        double tc = characteristic_time_tc(model, spec.m, spec.samples, tc_rng);
        for (ContentId c : spec.contents)
          echo(c, "LRUApprox",
               lru_single_hit_rate_approx(model.p(c), prof.freshness(c), tc), 0.0);
        for (ContentId c : spec.contents)
          echo(c, "UpperBound", upper_bound_hit_rate(model.p(c), prof.freshness(c)), 0.0);
        progress(b + 1, spec.beta_grid.size());
      }
      std::string all_series = detail::series_word_list(spec.series) + " LRUApprox UpperBound";
      std::string content_words;
      for (ContentId c : spec.contents) {
        if (!content_words.empty()) content_words += ' ';
        content_words += std::to_string(c);
      }
      gp = detail::gp_prelude(stem, "beta", "per-content hit rate");
      gp += "plot for [s in \"" + all_series + "\"] for [c in \"" + content_words + "\"] '" +
            stem +
            ".csv' every ::1 using 1:(strcol(3) eq s && strcol(2) eq c ? column(4) : 1/0) "
            "with linespoints title sprintf('%s content %s', s, c)\n";
      break;
    }

    case ExperimentKind::Approx1Error: {
      header = "n,beta,content,m,mu,samples,seed";
      std::size_t point = 0, total = spec.n_grid.size() * spec.beta_grid.size();
      for (std::size_t ni = 0; ni < spec.n_grid.size(); ++ni) {
        ContentId n = spec.n_grid[ni];
        std::uint64_t m = detail::scaled_cache_size(n, spec.m_ratio);
        for (std::size_t bi = 0; bi < spec.beta_grid.size(); ++bi) {
          double beta = spec.beta_grid[bi];
          PopularityModel model = build_zipf(n, beta);
          SplitMix64 rng(derive_seed(spec.seed, point));
          for (ContentId c : spec.contents) {
            double mu = approximation1_error(model, m, c, spec.samples, rng);
            rows.push_back(fmt(std::uint64_t(n)) + "," + fmt(beta) + "," +
                           fmt(std::uint64_t(c)) + "," + fmt(m) + "," + fmt(mu) + "," +
                           fmt(spec.samples) + "," + fmt(spec.seed));
          }
          progress(++point, total);
        }
      }
      gp = detail::gp_prelude(stem, "catalog size n", "relative error mu");
      gp += "set logscale x\n";
      gp += "plot for [b in \"" + [&] {
        std::string s;
        for (double bb : spec.beta_grid) {
          if (!s.empty()) s += ' ';
          s += fmt(bb);
        }
        return s;
      }() + "\"] '" + stem +
            ".csv' every ::1 using 1:(strcol(2) eq b ? column(5) : 1/0) with linespoints "
            "title sprintf('beta=%s', b)\n";
      break;
    }

    case ExperimentKind::CharTimeCv: {
      header = "n,beta,content,m,cv,samples,seed";
      std::size_t point = 0, total = spec.n_grid.size() * spec.beta_grid.size();
      for (std::size_t ni = 0; ni < spec.n_grid.size(); ++ni) {
        ContentId n = spec.n_grid[ni];
        std::uint64_t m = detail::scaling_cache_size(spec.m_scaling, n, spec.m_ratio);
        for (std::size_t bi = 0; bi < spec.beta_grid.size(); ++bi) {
          double beta = spec.beta_grid[bi];
          PopularityModel model = build_zipf(n, beta);
          SplitMix64 rng(derive_seed(spec.seed, point));
          for (ContentId c : spec.contents) {
            double cv = coefficient_of_variation(model, m, c, spec.samples, rng);
            rows.push_back(fmt(std::uint64_t(n)) + "," + fmt(beta) + "," +
                           fmt(std::uint64_t(c)) + "," + fmt(m) + "," + fmt(cv) + "," +
                           fmt(spec.samples) + "," + fmt(spec.seed));
          }
          progress(++point, total);
        }
      }
      gp = detail::gp_prelude(stem, "catalog size n", "coefficient of variation");
      gp += "set logscale x\n";
      gp += "plot for [b in \"" + [&] {
        std::string s;
        for (double bb : spec.beta_grid) {
          if (!s.empty()) s += ' ';
          s += fmt(bb);
        }
        return s;
      }() + "\"] '" + stem +
            ".csv' every ::1 using 1:(strcol(2) eq b ? column(5) : 1/0) with linespoints "
            "title sprintf('beta=%s', b)\n";
      break;
    }

    case ExperimentKind::TailBounds: {
      header =
          "n,m,delta,expected,lower_bound,upper_bound,empirical_lower,empirical_upper,samples,"
          "seed";
      for (std::size_t di = 0; di < spec.delta_grid.size(); ++di) {
        double delta = spec.delta_grid[di];
        SplitMix64 rng(derive_seed(spec.seed, di));
        TailBoundReport r = empirical_tail_check(spec.n, spec.m, delta, spec.samples, rng);
        rows.push_back(fmt(std::uint64_t(spec.n)) + "," + fmt(spec.m) + "," + fmt(delta) + "," +
                       fmt(r.expected) + "," + fmt(r.lower_bound) + "," + fmt(r.upper_bound) +
                       "," + fmt(*r.empirical_lower) + "," + fmt(*r.empirical_upper) + "," +
                       fmt(spec.samples) + "," + fmt(spec.seed));
        progress(di + 1, spec.delta_grid.size());
      }
      gp = detail::gp_prelude(stem, "delta", "tail probability");
      gp += "set logscale y\n";
      gp += "plot '" + stem + ".csv' every ::1 using 3:5 with linespoints title 'lower bound', \\\n";
      gp += "     '" + stem + ".csv' every ::1 using 3:7 with points title 'empirical lower', \\\n";
      gp += "     '" + stem + ".csv' every ::1 using 3:6 with linespoints title 'upper bound', \\\n";
      gp += "     '" + stem + ".csv' every ::1 using 3:8 with points title 'empirical upper'\n";
      break;
    }

    case ExperimentKind::ZipfConvergence: {
      header = "n,m,beta,m_exponent,prob_all_distinct,samples,seed";
      SplitMix64 rng(derive_seed(spec.seed, 0));
      std::vector<double> probs =
          zipf_convergence_check(spec.beta, spec.n_grid, spec.m_exponent, spec.samples, rng);
      for (std::size_t i = 0; i < spec.n_grid.size(); ++i) {
        std::uint64_t m = power_law_cache_size(spec.n_grid[i], spec.m_exponent);
        rows.push_back(fmt(std::uint64_t(spec.n_grid[i])) + "," + fmt(m) + "," + fmt(spec.beta) +
                       "," + fmt(spec.m_exponent) + "," + fmt(probs[i]) + "," +
                       fmt(spec.samples) + "," + fmt(spec.seed));
      }
      progress(spec.n_grid.size(), spec.n_grid.size());
      gp = detail::gp_prelude(stem, "catalog size n", "P(first m requests all distinct)");
      gp += "set logscale x\n";
      gp += "plot '" + stem + ".csv' every ::1 using 1:5 with linespoints title 'empirical'\n";
      break;
    }
  }

  detail::write_text_file(csv_path, detail::csv_text(header, rows));
  detail::write_text_file(gp_path, gp);

  // Manifest: the fully resolved configuration plus the tool version, so a
  // CSV can always be traced back to the run that made it.  No timestamps:
  // reruns must be byte-identical.
  nlohmann::ordered_json man;
  man["tool"] = "freshcache";
  man["version"] = version_string;
  man["experiment"] = info.name;
  man["name"] = spec.name;
  nlohmann::ordered_json cfg;
  switch (spec.kind) {
    case ExperimentKind::HitVsBeta:
    case ExperimentKind::HitRatePerContent: {
      cfg["n"] = spec.n;
      cfg["m"] = spec.m;
      cfg["freshness"] = {{"kind", spec.freshness.kind_name()}};
      if (spec.freshness.kind == FreshnessKind::Uniform) cfg["freshness"]["F"] = spec.freshness.f;
      if (spec.freshness.kind == FreshnessKind::Linear)
        cfg["freshness"]["slope"] = spec.freshness.slope;
      if (spec.freshness.kind == FreshnessKind::Explicit)
        cfg["freshness"]["values"] = spec.freshness.values;
      cfg["beta_grid"] = spec.beta_grid;
      if (spec.kind == ExperimentKind::HitRatePerContent) {
        cfg["contents"] = spec.contents;
        cfg["samples"] = spec.samples;
      }
      cfg["slots"] = spec.slots;
      if (spec.warmup) cfg["warmup"] = *spec.warmup;
      cfg["replications"] = spec.replications;
      break;
    }
    case ExperimentKind::HitVsF:
      cfg["n"] = spec.n;
      cfg["m"] = spec.m;
      cfg["beta"] = spec.beta;
      cfg["f_grid"] = spec.f_grid;
      cfg["slots"] = spec.slots;
      if (spec.warmup) cfg["warmup"] = *spec.warmup;
      cfg["replications"] = spec.replications;
      break;
    case ExperimentKind::Approx1Error:
      cfg["n_grid"] = spec.n_grid;
      cfg["beta_grid"] = spec.beta_grid;
      cfg["m_ratio"] = spec.m_ratio;
      cfg["contents"] = spec.contents;
      cfg["samples"] = spec.samples;
      break;
    case ExperimentKind::CharTimeCv:
      cfg["n_grid"] = spec.n_grid;
      cfg["beta_grid"] = spec.beta_grid;
      cfg["m_scaling"] = spec.m_scaling;
      if (spec.m_scaling == "linear") cfg["m_ratio"] = spec.m_ratio;
      cfg["contents"] = spec.contents;
      cfg["samples"] = spec.samples;
      break;
    case ExperimentKind::TailBounds:
      cfg["n"] = spec.n;
      cfg["m"] = spec.m;
      cfg["delta_grid"] = spec.delta_grid;
      cfg["samples"] = spec.samples;
      break;
    case ExperimentKind::ZipfConvergence:
      cfg["beta"] = spec.beta;
      cfg["n_grid"] = spec.n_grid;
      cfg["m_exponent"] = spec.m_exponent;
      cfg["samples"] = spec.samples;
      break;
  }
  cfg["seed"] = spec.seed;
  if (!spec.series.empty()) {
    std::vector<std::string> names;
    for (Series s : spec.series) names.push_back(series_name(s));
    cfg["policies"] = names;
  }
  man["config"] = cfg;
  man["outputs"] = {csv_path.filename().string(), gp_path.filename().string()};
  detail::write_text_file(manifest_path, man.dump(2) + "\n");

  return {csv_path.string(), gp_path.string(), manifest_path.string()};
}

} // namespace freshcache
