#pragma once

// Experiment configuration files, per-cycle CSV and JSON summaries.
//
// Config file (JSON, unknown keys rejected, only `seed` and `output` required):
//
//   {
//     "topology": "desk",                       // or "full"
//     "seed": 42,
//     "environment": { "interference_step": 0.5, "interference_max": 6.0,
//                      "load_step": 0.1, "load_min": 0.5, "load_max": 2.0 },
//     "engine": { "warmup_cycles": 30, "total_cycles": 200, "eta": 0.05,
//                 "cutoff_rule": "min_median_quarter", "evaluation_mode": true,
//                 "ground_truth": "analytic", "window_cap": 0, "threads": 1 },
//     "smc": { "epsilon": 0.01, "alpha": 0.1, "kappa_scale": 100.0 },
//     "quality": { "lower": 0.0, "upper": 100.0 },
//     "output": { "csv": "cycles.csv", "summary": "summary.json" }
//   }

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaptbound/adaptation_engine.hpp"
#include "adaptbound/clt_bounds.hpp"
#include "adaptbound/deltaiot_sim.hpp"
#include "adaptbound/numeric.hpp"

namespace adaptbound::io {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string topology = "desk";
  deltaiot::WalkParams walk;
  engine::EngineConfig engine;
  std::uint64_t seed = 0;
  std::string csv_path;
  std::string summary_path;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where,
                           std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

inline double read_number(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline std::uint64_t read_unsigned(const json& obj, const char* key, std::uint64_t fallback,
                                   const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(where + "." + key + ": expected a non-negative integer");
}

inline std::string read_string(const json& obj, const char* key, std::string fallback,
                               const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline bool read_bool(const json& obj, const char* key, bool fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(where + "." + key + ": expected a boolean");
  return v.get<bool>();
}

inline json optional_number(const std::optional<double>& v) {
  return v ? json(round_sig12(*v)) : json(nullptr);
}

}  // namespace detail

/// Parses and validates a config document. Throws ConfigError.
inline ExperimentConfig parse_config(const nlohmann::json& doc) {
  using detail::read_bool;
  using detail::read_number;
  using detail::read_string;
  using detail::read_unsigned;

  detail::reject_unknown(doc, "config",
                         {"topology", "seed", "environment", "engine", "smc", "quality", "output"});
  ExperimentConfig cfg;
  cfg.topology = read_string(doc, "topology", "desk", "config");

  if (!doc.contains("seed")) throw ConfigError("config.seed: required");
  cfg.seed = read_unsigned(doc, "seed", 0, "config");

  if (doc.contains("environment")) {
    const auto& e = doc.at("environment");
    detail::reject_unknown(e, "environment", {"interference_step", "interference_max", "load_step",
                                              "load_min", "load_max"});
    cfg.walk.interference_step = read_number(e, "interference_step", cfg.walk.interference_step, "environment");
    cfg.walk.interference_max = read_number(e, "interference_max", cfg.walk.interference_max, "environment");
    cfg.walk.load_step = read_number(e, "load_step", cfg.walk.load_step, "environment");
    cfg.walk.load_min = read_number(e, "load_min", cfg.walk.load_min, "environment");
    cfg.walk.load_max = read_number(e, "load_max", cfg.walk.load_max, "environment");
  }

  auto& eng = cfg.engine;
  if (doc.contains("engine")) {
    const auto& e = doc.at("engine");
    detail::reject_unknown(e, "engine", {"warmup_cycles", "total_cycles", "eta", "cutoff_rule",
                                         "evaluation_mode", "ground_truth", "window_cap", "threads"});
    eng.warmup_cycles = read_unsigned(e, "warmup_cycles", eng.warmup_cycles, "engine");
    eng.total_cycles = read_unsigned(e, "total_cycles", eng.total_cycles, "engine");
    eng.eta = read_number(e, "eta", eng.eta, "engine");
    const std::string rule = read_string(e, "cutoff_rule", "min_median_quarter", "engine");
    if (rule != "min_median_quarter") throw ConfigError("engine.cutoff_rule: unknown rule '" + rule + "'");
    eng.evaluation_mode = read_bool(e, "evaluation_mode", eng.evaluation_mode, "engine");
    const std::string truth = read_string(e, "ground_truth", "analytic", "engine");
    if (truth == "analytic") {
      eng.ground_truth = engine::GroundTruth::Analytic;
    } else if (truth == "smc") {
      eng.ground_truth = engine::GroundTruth::Smc;
    } else {
      throw ConfigError("engine.ground_truth: expected \"analytic\" or \"smc\"");
    }
    eng.window_cap = read_unsigned(e, "window_cap", eng.window_cap, "engine");
    eng.threads = static_cast<unsigned>(read_unsigned(e, "threads", eng.threads, "engine"));
  }

  if (doc.contains("smc")) {
    const auto& s = doc.at("smc");
    detail::reject_unknown(s, "smc", {"epsilon", "alpha", "kappa_scale"});
    eng.smc.epsilon = read_number(s, "epsilon", eng.smc.epsilon, "smc");
    eng.smc.alpha = read_number(s, "alpha", eng.smc.alpha, "smc");
    eng.smc.kappa_scale = read_number(s, "kappa_scale", eng.smc.kappa_scale, "smc");
  }

  if (doc.contains("quality")) {
    const auto& q = doc.at("quality");
    detail::reject_unknown(q, "quality", {"lower", "upper"});
    eng.quality.lower = read_number(q, "lower", eng.quality.lower, "quality");
    eng.quality.upper = read_number(q, "upper", eng.quality.upper, "quality");
  }

  if (!doc.contains("output")) throw ConfigError("config.output: required");
  const auto& out = doc.at("output");
  detail::reject_unknown(out, "output", {"csv", "summary"});
  cfg.csv_path = read_string(out, "csv", "", "output");
  cfg.summary_path = read_string(out, "summary", "", "output");
  if (cfg.csv_path.empty()) throw ConfigError("output.csv: required");
  if (cfg.summary_path.empty()) throw ConfigError("output.summary: required");

  try {
    deltaiot::topology_preset(cfg.topology);
    cfg.walk.validate();
    eng.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kCsvHeader =
    "cycle,reduced_size,cutoff,b_hat_w,selected_id,B_r,B_w,measured_error,error_bound,"
    "min_probability,empirical_risk,bound_holds";

/// One row per cycle; not-applicable values are empty cells.
inline void write_csv(std::ostream& out, std::span<const engine::CycleRecord> records) {
  const auto cell = [](const std::optional<double>& v) { return v ? format_sig12(*v) : std::string(); };
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    const std::optional<double> bound =
        r.bound ? std::optional<double>(r.bound->error_bound) : std::nullopt;
    const std::optional<double> prob =
        r.bound ? std::optional<double>(r.bound->min_probability) : std::nullopt;
    out << r.cycle << ',' << r.reduced_size << ',' << cell(r.cutoff) << ',' << cell(r.b_hat_w) << ','
        << r.selected_id << ',' << cell(r.b_r) << ',' << cell(r.b_w) << ','
        << cell(r.measured_error) << ',' << cell(bound) << ',' << cell(prob) << ','
        << format_sig12(r.empirical_risk) << ',';
    if (r.bound_holds) out << (*r.bound_holds ? "true" : "false");
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Summary

struct ErrorStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

struct Summary {
  std::uint64_t cycles = 0;
  std::uint64_t warmup_cycles = 0;
  std::uint64_t reduced_cycles = 0;
  std::uint64_t bounded_cycles = 0;
  std::optional<ErrorStats> measured_error;  // over post-warm-up cycles
  std::optional<double> bound_holds_fraction;
  std::optional<double> mean_min_probability;
  // mean_min_probability minus three binomial standard deviations
  std::optional<double> soundness_threshold;
  std::optional<double> mean_error_bound;
  std::optional<double> mean_reduced_size;
};

inline Summary summarize(std::span<const engine::CycleRecord> records) {
  Summary s;
  s.cycles = records.size();
  double err_sum = 0.0;
  double err_sq = 0.0;
  std::uint64_t err_count = 0;
  double reduced_sum = 0.0;
  double prob_sum = 0.0;
  double bound_sum = 0.0;
  std::uint64_t holds = 0;
  ErrorStats stats{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& r : records) {
    if (r.warmup) {
      ++s.warmup_cycles;
      continue;
    }
    ++s.reduced_cycles;
    reduced_sum += static_cast<double>(r.reduced_size);
    if (r.measured_error) {
      const double e = *r.measured_error;
      stats.min = std::min(stats.min, e);
      stats.max = std::max(stats.max, e);
      err_sum += e;
      ++err_count;
    }
    if (r.bound) {
      ++s.bounded_cycles;
      prob_sum += r.bound->min_probability;
      bound_sum += r.bound->error_bound;
      if (r.bound_holds && *r.bound_holds) ++holds;
    }
  }
  if (s.reduced_cycles > 0) s.mean_reduced_size = reduced_sum / static_cast<double>(s.reduced_cycles);
  if (err_count > 0) {
    stats.mean = err_sum / static_cast<double>(err_count);
    for (const auto& r : records) {
      if (!r.warmup && r.measured_error) err_sq += (*r.measured_error - stats.mean) * (*r.measured_error - stats.mean);
    }
    stats.std = std::sqrt(err_sq / static_cast<double>(err_count));
    s.measured_error = stats;
  }
  if (s.bounded_cycles > 0) {
    const double k = static_cast<double>(s.bounded_cycles);
    const double p = prob_sum / k;
    s.mean_min_probability = p;
    s.mean_error_bound = bound_sum / k;
    s.soundness_threshold = p - 3.0 * std::sqrt(p * (1.0 - p) / k);
    if (err_count > 0) s.bound_holds_fraction = static_cast<double>(holds) / k;
  }
  return s;
}

inline nlohmann::json summary_json(const Summary& s) {
  using detail::optional_number;
  nlohmann::json j;
  j["cycles"] = s.cycles;
  j["warmup_cycles"] = s.warmup_cycles;
  j["reduced_cycles"] = s.reduced_cycles;
  j["bounded_cycles"] = s.bounded_cycles;
  if (s.measured_error) {
    j["measured_error"] = {{"min", round_sig12(s.measured_error->min)},
                           {"max", round_sig12(s.measured_error->max)},
                           {"mean", round_sig12(s.measured_error->mean)},
                           {"std", round_sig12(s.measured_error->std)}};
  } else {
    j["measured_error"] = nullptr;
  }
  j["bound_holds_fraction"] = optional_number(s.bound_holds_fraction);
  j["mean_min_probability"] = optional_number(s.mean_min_probability);
  j["soundness_threshold"] = optional_number(s.soundness_threshold);
  j["mean_error_bound"] = optional_number(s.mean_error_bound);
  j["mean_reduced_size"] = optional_number(s.mean_reduced_size);
  return j;
}

inline nlohmann::json bound_json(const bounds::TheoremBound& b, double kappa) {
  return {
      {"nu", round_sig12(b.nu)},
      {"delta", round_sig12(b.delta)},
      {"delta_prime", round_sig12(b.delta_prime)},
      {"expected_risk_upper", round_sig12(b.expected_risk_upper)},
      {"kappa", round_sig12(kappa)},
      {"p_m", round_sig12(b.p_m)},
      {"n_feasible", b.n_feasible},
      {"b_hat_w", round_sig12(b.b_hat_w)},
      {"cutoff", round_sig12(b.cutoff)},
      {"error_bound", round_sig12(b.error_bound)},
      {"min_probability", round_sig12(b.min_probability)},
  };
}

inline nlohmann::json coverage_json(const smc::CoverageReport& r) {
  return {
      {"epsilon", round_sig12(r.epsilon)},
      {"alpha", round_sig12(r.alpha)},
      {"repetitions", r.repetitions},
      {"samples_per_estimate", r.samples_per_estimate},
      {"true_mean", round_sig12(r.true_mean)},
      {"covered", r.covered},
      {"coverage", round_sig12(r.coverage)},
      {"threshold", round_sig12(r.threshold)},
      {"pass", r.pass},
  };
}

struct RunOutput {
  std::vector<engine::CycleRecord> records;
  std::string csv;
  std::string summary;
};

/// Runs the configured experiment and renders both outputs in memory.
inline RunOutput run_configured(const ExperimentConfig& cfg) {
  RunOutput out;
  out.records =
      engine::run_experiment(deltaiot::topology_preset(cfg.topology), cfg.engine, cfg.walk, cfg.seed);
  std::ostringstream csv;
  write_csv(csv, out.records);
  out.csv = csv.str();
  nlohmann::json summary = summary_json(summarize(out.records));
  summary["topology"] = cfg.topology;
  summary["seed"] = cfg.seed;
  out.summary = summary.dump(2) + "\n";
  return out;
}

}  // namespace adaptbound::io
