#pragma once

// Closed-form learning-theory bounds for a linear regressor whose training
// labels and final verification both come from a statistical model checker.
//
// Notation follows the usual VC-bound conventions:
//   m   training samples          d   VC dimension of the learner
//   eta confidence slack of the VC bound
//   kappa  SMC estimation error in quality units, alpha its significance
//
// All quantities are computed in IEEE double. Every function is pure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>

#include "adaptbound/errors.hpp"

namespace adaptbound::bounds {

enum class Goal { Minimize };

// Value range [lower, upper] of the quality property being optimized. With the
// squared loss the loss lies in [a, b] = [0, (upper - lower)^2] and its
// derivative in y is bounded by b' = 2 (upper - lower).
struct QualityDomain {
  double lower = 0.0;
  double upper = 100.0;
  Goal goal = Goal::Minimize;

  static QualityDomain make(double lower, double upper) {
    QualityDomain q{lower, upper, Goal::Minimize};
    q.validate();
    return q;
  }

  void validate() const {
    require(std::isfinite(lower) && std::isfinite(upper), "quality bounds must be finite");
    require(lower < upper, "L_q < U_q");
  }

  [[nodiscard]] double range() const noexcept { return upper - lower; }
  [[nodiscard]] double loss_lower() const noexcept { return 0.0; }
  [[nodiscard]] double loss_upper() const noexcept { return range() * range(); }
  [[nodiscard]] double loss_derivative_bound() const noexcept { return 2.0 * range(); }
};

/// VC dimension of affine functions on R^n: n + 1.
inline std::uint64_t vc_dimension_linear(std::uint64_t input_dim) {
  require(input_dim >= 1, "input_dim >= 1");
  return input_dim + 1;
}

struct LearnerCapacity {
  std::uint64_t input_dim = 0;
  std::uint64_t vc_dim = 0;

  static LearnerCapacity linear(std::uint64_t input_dim) {
    return {input_dim, vc_dimension_linear(input_dim)};
  }
};

/// nu = (d (ln(2m/d) + 1) - ln(eta/4)) / m
inline double compute_nu(std::uint64_t m, std::uint64_t d, double eta) {
  require(d >= 1, "d >= 1");
  require(d < m, "d >= m");
  require(eta > 0.0 && eta < 1.0, "eta must lie in (0, 1)");
  const double md = static_cast<double>(m);
  const double dd = static_cast<double>(d);
  return (dd * (std::log(2.0 * md / dd) + 1.0) - std::log(eta / 4.0)) / md;
}

/// delta = (b - a) sqrt(nu)
inline double compute_delta(const QualityDomain& domain, double nu) {
  domain.validate();
  require(nu >= 0.0, "nu >= 0");
  return (domain.loss_upper() - domain.loss_lower()) * std::sqrt(nu);
}

/// delta' = delta + b' kappa; widens the VC bound for SMC-labelled targets.
inline double compute_delta_prime(double delta, const QualityDomain& domain, double kappa) {
  domain.validate();
  require(delta >= 0.0, "delta >= 0");
  require(kappa >= 0.0, "kappa >= 0");
  return delta + domain.loss_derivative_bound() * kappa;
}

/// Lower estimate of the probability that a feasible option's prediction lands
/// inside the reduced space, clamped to [0, 1].
inline double estimate_p_m(double cutoff, double b_hat_w, double expected_risk_upper) {
  require(std::isfinite(cutoff) && std::isfinite(b_hat_w), "cutoff and b_hat_w must be finite");
  require(expected_risk_upper > 0.0, "expected_risk_upper > 0");
  require(b_hat_w <= cutoff, "b_hat_w <= cutoff");
  const double p = (cutoff - b_hat_w) / (2.0 * std::sqrt(expected_risk_upper));
  return std::clamp(p, 0.0, 1.0);
}

/// 1 - (1 - p)^n, evaluated as -expm1(n log1p(-p)) so small p*n keeps full
/// relative precision.
inline double feasible_prob_bound(double p_m, std::uint64_t n) {
  require(p_m >= 0.0 && p_m <= 1.0, "p_m must lie in [0, 1]");
  if (n == 0 || p_m == 0.0) return 0.0;
  if (p_m == 1.0) return 1.0;
  return -std::expm1(static_cast<double>(n) * std::log1p(-p_m));
}

struct RiskBoundInputs {
  std::uint64_t m = 0;
  std::uint64_t d = 0;
  double eta = 0.05;
  double empirical_risk = 0.0;  // squared quality units
  double kappa = 0.0;           // quality units
  double alpha = 0.1;
};

struct TheoremBound {
  double nu = 0.0;
  double delta = 0.0;
  double delta_prime = 0.0;
  double expected_risk_upper = 0.0;  // r'_e + delta'
  double p_m = 0.0;
  std::uint64_t n_feasible = 0;
  double b_hat_w = 0.0;
  double cutoff = 0.0;
  double error_bound = 0.0;      // sqrt(r'_e + delta') + kappa
  double min_probability = 0.0;  // (1-eta)(1-alpha)^2 (1-(1-p_m)^n)
};

// Radius sqrt(r'_e + delta') around the best prediction inside which options
// count as feasible. Shared by theorem_bound and count_feasible callers.
inline double feasible_radius(const RiskBoundInputs& in, const QualityDomain& domain) {
  const double nu = compute_nu(in.m, in.d, in.eta);
  const double delta_prime = compute_delta_prime(compute_delta(domain, nu), domain, in.kappa);
  return std::sqrt(in.empirical_risk + delta_prime);
}

/// Error bound on the best option selected from the reduced adaptation space,
/// together with the probability that it holds.
inline TheoremBound theorem_bound(const RiskBoundInputs& in, const QualityDomain& domain,
                                  double cutoff, double b_hat_w, std::uint64_t n_feasible) {
  domain.validate();
  require(in.alpha >= 0.0 && in.alpha < 1.0, "alpha must lie in [0, 1)");
  require(in.empirical_risk >= 0.0, "empirical_risk >= 0");
  require(in.empirical_risk <= domain.loss_upper(), "empirical_risk <= (U_q - L_q)^2");

  TheoremBound out;
  out.nu = compute_nu(in.m, in.d, in.eta);
  out.delta = compute_delta(domain, out.nu);
  out.delta_prime = compute_delta_prime(out.delta, domain, in.kappa);
  out.expected_risk_upper = in.empirical_risk + out.delta_prime;
  out.p_m = estimate_p_m(cutoff, b_hat_w, out.expected_risk_upper);
  out.n_feasible = n_feasible;
  out.b_hat_w = b_hat_w;
  out.cutoff = cutoff;
  out.error_bound = std::sqrt(out.expected_risk_upper) + in.kappa;
  const double keep_smc = 1.0 - in.alpha;
  out.min_probability =
      (1.0 - in.eta) * (keep_smc * keep_smc) * feasible_prob_bound(out.p_m, n_feasible);
  return out;
}

/// Number of predictions within `radius` of the best prediction b_hat_w.
inline std::uint64_t count_feasible(std::span<const double> predictions, double b_hat_w,
                                    double radius) {
  require(!predictions.empty(), "predictions must be non-empty");
  require(radius >= 0.0, "radius >= 0");
  return static_cast<std::uint64_t>(std::count_if(
      predictions.begin(), predictions.end(), [&](double p) { return p - b_hat_w <= radius; }));
}

}  // namespace adaptbound::bounds
