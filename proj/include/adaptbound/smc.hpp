#pragma once

// Fixed-sample statistical model checking. A model exposes simulate(seed)
// returning a [0, 1]-bounded run outcome; the checker averages
// N = ceil(ln(2/alpha) / (2 eps^2)) independent runs, which by Hoeffding's
// inequality lies within eps of the true mean with probability >= 1 - alpha.
// The estimate is reported in quality units: mean * kappa_scale, with
// half-width kappa = kappa_scale * eps.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adaptbound/errors.hpp"
#include "adaptbound/numeric.hpp"
#include "adaptbound/parallel.hpp"
#include "adaptbound/random.hpp"

namespace adaptbound::smc {

template <class M>
concept StochasticModel = requires(const M& model, std::uint64_t seed) {
  { model.simulate(seed) } -> std::convertible_to<double>;
};

struct SmcConfig {
  double epsilon = 0.01;
  double alpha = 0.1;
  double kappa_scale = 100.0;

  void validate() const {
    require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    require(kappa_scale > 0.0 && std::isfinite(kappa_scale), "kappa_scale > 0");
  }

  [[nodiscard]] double kappa() const noexcept { return kappa_scale * epsilon; }
};

struct SmcEstimate {
  double mean = 0.0;   // quality units
  double kappa = 0.0;  // half-width, quality units
  double alpha = 0.0;
  std::uint64_t samples_used = 0;
};

inline std::uint64_t required_samples(double epsilon, double alpha) {
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  return static_cast<std::uint64_t>(std::ceil(std::log(2.0 / alpha) / (2.0 * epsilon * epsilon)));
}

namespace detail {

inline double checked_outcome(double outcome, std::uint64_t run) {
  if (!(outcome >= 0.0 && outcome <= 1.0)) {
    throw ModelError("simulation run " + std::to_string(run) + " returned " +
                     format_sig12(outcome) + ", outside [0, 1]");
  }
  return outcome;
}

}  // namespace detail

/// Runs required_samples(eps, alpha) simulations with run seeds
/// derive_seed(base_seed, run_index). Outcomes are reduced in run-index order,
/// so the result is bit-identical for any thread count.
template <StochasticModel M>
SmcEstimate estimate(const M& model, const SmcConfig& config, std::uint64_t base_seed,
                     unsigned threads = 1) {
  config.validate();
  const std::uint64_t runs = required_samples(config.epsilon, config.alpha);

  CompensatedSum sum;
  if (threads <= 1) {
    for (std::uint64_t r = 0; r < runs; ++r) {
      sum.add(detail::checked_outcome(model.simulate(derive_seed(base_seed, r)), r));
    }
  } else {
    std::vector<double> outcomes(runs);
    parallel_for(runs, threads, [&](std::size_t r) {
      outcomes[r] = detail::checked_outcome(model.simulate(derive_seed(base_seed, r)), r);
    });
    for (double o : outcomes) sum.add(o);
  }

  SmcEstimate out;
  out.mean = config.kappa_scale * (sum.value() / static_cast<double>(runs));
  out.kappa = config.kappa();
  out.alpha = config.alpha;
  out.samples_used = runs;
  return out;
}

template <class M>
struct OptionModel {
  std::uint64_t id = 0;
  M model;
};

struct VerifiedOption {
  std::uint64_t id = 0;
  SmcEstimate estimate;
};

/// Estimates every option with seed derive_seed(base_seed, id). Results come
/// back in input order; each option's estimate depends only on its id.
template <StochasticModel M>
std::vector<VerifiedOption> verify_options(std::span<const OptionModel<M>> options,
                                           const SmcConfig& config, std::uint64_t base_seed,
                                           unsigned threads = 1) {
  config.validate();
  std::vector<VerifiedOption> out(options.size());
  parallel_for(options.size(), threads, [&](std::size_t i) {
    out[i].id = options[i].id;
    out[i].estimate = estimate(options[i].model, config, derive_seed(base_seed, options[i].id));
  });
  return out;
}

// Known-mean Bernoulli model for coverage experiments.
struct BernoulliModel {
  double p = 0.5;

  [[nodiscard]] double simulate(std::uint64_t seed) const noexcept {
    SplitMix64 rng(seed);
    return rng.uniform() < p ? 1.0 : 0.0;
  }
};

struct CoverageReport {
  double epsilon = 0.0;
  double alpha = 0.0;
  std::uint64_t repetitions = 0;
  std::uint64_t samples_per_estimate = 0;
  double true_mean = 0.0;
  std::uint64_t covered = 0;
  double coverage = 0.0;
  double threshold = 0.0;  // (1 - alpha) minus three-sigma binomial slack
  bool pass = false;
};

/// Repeats the estimate on a Bernoulli(p) model under independent base seeds
/// and counts intervals [mean - kappa, mean + kappa] containing the truth.
inline CoverageReport coverage_experiment(double epsilon, double alpha, std::uint64_t repetitions,
                                          std::uint64_t seed, double p = 0.5,
                                          unsigned threads = 1) {
  require(repetitions > 0, "repetitions > 0");
  require(p >= 0.0 && p <= 1.0, "p must lie in [0, 1]");
  const SmcConfig config{epsilon, alpha, 1.0};
  config.validate();

  const BernoulliModel model{p};
  std::vector<char> hit(repetitions, 0);
  parallel_for(repetitions, threads, [&](std::size_t rep) {
    const SmcEstimate e = estimate(model, config, derive_seed(seed, rep));
    hit[rep] = std::fabs(e.mean - p) <= e.kappa ? 1 : 0;
  });

  CoverageReport report;
  report.epsilon = epsilon;
  report.alpha = alpha;
  report.repetitions = repetitions;
  report.samples_per_estimate = required_samples(epsilon, alpha);
  report.true_mean = p;
  for (char h : hit) report.covered += static_cast<std::uint64_t>(h);
  report.coverage = static_cast<double>(report.covered) / static_cast<double>(repetitions);
  const double reps = static_cast<double>(repetitions);
  report.threshold = (1.0 - alpha) - 3.0 * std::sqrt(alpha * (1.0 - alpha) / reps);
  report.pass = report.coverage >= report.threshold;
  return report;
}

}  // namespace adaptbound::smc
