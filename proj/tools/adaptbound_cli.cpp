// adaptbound: error bounds for learning-based adaptation-space reduction.
//
//   adaptbound bounds --m 6000 --d 86 --eta 0.05 --epsilon 0.01 --alpha 0.1 ...
//   adaptbound run configs/desk.json
//   adaptbound smc-selftest --epsilon 0.02 --alpha 0.05 --repetitions 500 --seed 1
//
// Exit codes: 0 success, 1 self-test failure, 2 usage or validation error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "adaptbound/clt_bounds.hpp"
#include "adaptbound/experiment_io.hpp"
#include "adaptbound/parallel.hpp"
#include "adaptbound/smc.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTestFailure = 1;
constexpr int kExitUsage = 2;

struct BoundsFlags {
  std::uint64_t m = 0;
  std::uint64_t d = 0;
  double eta = 0.0;
  double epsilon = 0.0;
  double alpha = 0.0;
  double kappa_scale = 100.0;
  double lower = 0.0;
  double upper = 100.0;
  double empirical_risk = 0.0;
  double cutoff = 0.0;
  double b_hat_w = 0.0;
  std::uint64_t n = 0;
};

int cmd_bounds(const BoundsFlags& f) {
  using namespace adaptbound;
  require(f.epsilon >= 0.0 && f.epsilon < 1.0, "epsilon must lie in [0, 1)");
  require(f.kappa_scale >= 0.0, "kappa_scale >= 0");
  const auto domain = bounds::QualityDomain::make(f.lower, f.upper);
  bounds::RiskBoundInputs in;
  in.m = f.m;
  in.d = f.d;
  in.eta = f.eta;
  in.empirical_risk = f.empirical_risk;
  in.kappa = f.kappa_scale * f.epsilon;
  in.alpha = f.alpha;
  const auto bound = bounds::theorem_bound(in, domain, f.cutoff, f.b_hat_w, f.n);
  std::cout << io::bound_json(bound, in.kappa).dump(2) << '\n';
  return kExitOk;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

int cmd_run(const std::string& config_path) {
  using namespace adaptbound;
  const io::ExperimentConfig cfg = io::load_config(config_path);
  const io::RunOutput out = io::run_configured(cfg);
  const std::filesystem::path csv = cfg.csv_path;
  const std::filesystem::path summary = cfg.summary_path;
  try {
    write_file(csv, out.csv);
    write_file(summary, out.summary);
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove(csv, ignored);
    std::filesystem::remove(summary, ignored);
    throw;
  }
  std::cout << out.summary;
  return kExitOk;
}

int cmd_smc_selftest(double epsilon, double alpha, std::uint64_t repetitions, std::uint64_t seed,
                     double mean, unsigned threads) {
  using namespace adaptbound;
  const auto report = smc::coverage_experiment(epsilon, alpha, repetitions, seed, mean, threads);
  std::cout << io::coverage_json(report).dump(2) << '\n';
  return report.pass ? kExitOk : kExitTestFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Error bounds for learning-based adaptation-space reduction"};
  app.require_subcommand(1);

  BoundsFlags bf;
  auto* bounds = app.add_subcommand("bounds", "Evaluate the selected-option error bound");
  bounds->add_option("--m", bf.m, "training samples")->required();
  bounds->add_option("--d", bf.d, "VC dimension of the learner")->required();
  bounds->add_option("--eta", bf.eta, "VC-bound confidence slack, in (0,1)")->required();
  bounds->add_option("--epsilon", bf.epsilon, "SMC approximation half-width")->required();
  bounds->add_option("--alpha", bf.alpha, "SMC significance, in [0,1)")->required();
  bounds->add_option("--kappa_scale", bf.kappa_scale, "kappa = kappa_scale * epsilon")
      ->capture_default_str();
  bounds->add_option("--L_q", bf.lower, "lower end of the quality range")->capture_default_str();
  bounds->add_option("--U_q", bf.upper, "upper end of the quality range")->capture_default_str();
  bounds->add_option("--empirical_risk", bf.empirical_risk, "training MSE")->required();
  bounds->add_option("--cutoff", bf.cutoff, "reduction cutoff C")->required();
  bounds->add_option("--b_hat_w", bf.b_hat_w, "minimum prediction")->required();
  bounds->add_option("--n", bf.n, "number of feasible options")->required();

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config file");
  run->add_option("config", config_path, "config file")->required();

  double st_epsilon = 0.02;
  double st_alpha = 0.05;
  std::uint64_t st_reps = 500;
  std::uint64_t st_seed = 1;
  double st_mean = 0.5;
  unsigned st_threads = adaptbound::default_thread_count();
  auto* selftest = app.add_subcommand("smc-selftest", "Coverage experiment on a Bernoulli model");
  selftest->add_option("--epsilon", st_epsilon)->capture_default_str();
  selftest->add_option("--alpha", st_alpha)->capture_default_str();
  selftest->add_option("--repetitions", st_reps)->capture_default_str();
  selftest->add_option("--seed", st_seed)->capture_default_str();
  selftest->add_option("--mean", st_mean, "true Bernoulli mean")->capture_default_str();
  selftest->add_option("--threads", st_threads, "worker threads (results do not depend on it)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (bounds->parsed()) return cmd_bounds(bf);
    if (run->parsed()) return cmd_run(config_path);
    if (selftest->parsed()) {
      return cmd_smc_selftest(st_epsilon, st_alpha, st_reps, st_seed, st_mean, st_threads);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitTestFailure;
  }
  return kExitUsage;
}
