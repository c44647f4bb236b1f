#pragma once

// Ordinary least-squares regressor y = w . x + b over adaptation-option
// feature vectors. Features are standardized over the training set before the
// normal equations are solved; the returned model is in raw feature units.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "adaptbound/errors.hpp"
#include "adaptbound/numeric.hpp"

namespace adaptbound::regression {

struct LabeledSample {
  std::vector<double> features;
  double target = 0.0;
};

class LinearModel {
 public:
  LinearModel() = default;
  LinearModel(std::vector<double> weights, double intercept, std::size_t trained_on = 0,
              bool ridge_used = false)
      : weights_(std::move(weights)),
        intercept_(intercept),
        trained_on_(trained_on),
        ridge_used_(ridge_used) {}

  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
  [[nodiscard]] double intercept() const noexcept { return intercept_; }
  [[nodiscard]] std::size_t input_dim() const noexcept { return weights_.size(); }
  [[nodiscard]] std::size_t trained_on() const noexcept { return trained_on_; }
  // True when the Gram matrix was numerically singular and the ridge term was added.
  [[nodiscard]] bool ridge_used() const noexcept { return ridge_used_; }

  [[nodiscard]] double predict(std::span<const double> x) const {
    require(x.size() == weights_.size(), "feature length does not match model");
    double y = intercept_;
    for (std::size_t j = 0; j < x.size(); ++j) y += weights_[j] * x[j];
    return y;
  }

 private:
  std::vector<double> weights_;
  double intercept_ = 0.0;
  std::size_t trained_on_ = 0;
  bool ridge_used_ = false;
};

// Relative ridge strength, scaled by the mean diagonal of the Gram matrix.
inline constexpr double kRidgeScale = 1e-8;
// Pivot ratio below which the Gram matrix counts as singular.
inline constexpr double kSingularPivotRatio = 1e-12;

/// Least-squares fit with intercept. Falls back to ridge regularization when
/// the system is underdetermined or numerically singular.
inline LinearModel fit(std::span<const LabeledSample> samples) {
  require(!samples.empty(), "dataset must be non-empty");
  const std::size_t m = samples.size();
  const std::size_t n = samples.front().features.size();
  for (const auto& s : samples) {
    require(s.features.size() == n, "inconsistent feature lengths");
  }

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  double y_mean = 0.0;
  for (const auto& s : samples) {
    for (std::size_t j = 0; j < n; ++j) mean[static_cast<Eigen::Index>(j)] += s.features[j];
    y_mean += s.target;
  }
  mean /= static_cast<double>(m);
  y_mean /= static_cast<double>(m);

  Eigen::VectorXd scale = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (const auto& s : samples) {
    for (std::size_t j = 0; j < n; ++j) {
      const double c = s.features[j] - mean[static_cast<Eigen::Index>(j)];
      scale[static_cast<Eigen::Index>(j)] += c * c;
    }
  }
  for (Eigen::Index j = 0; j < scale.size(); ++j) {
    const double sd = std::sqrt(scale[j] / static_cast<double>(m));
    // constant column: leave unscaled, it centers to zero and the ridge path handles it
    scale[j] = sd > 0.0 ? sd : 1.0;
  }

  Eigen::MatrixXd z(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  Eigen::VectorXd yc(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < n; ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      z(row, col) = (samples[i].features[j] - mean[col]) / scale[col];
    }
    yc[row] = samples[i].target - y_mean;
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  bool ridge = false;
  if (n > 0) {
    Eigen::MatrixXd gram = z.transpose() * z;
    const Eigen::VectorXd rhs = z.transpose() * yc;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    // pivoted LDLT: the smallest-to-largest pivot ratio reveals rank loss
    const auto pivots = ldlt.vectorD().cwiseAbs();
    const bool singular = m < n + 1 || ldlt.info() != Eigen::Success ||
                          !(pivots.minCoeff() > kSingularPivotRatio * pivots.maxCoeff());
    if (singular) {
      ridge = true;
      const double trace_scale = gram.trace() / static_cast<double>(n);
      const double lambda = kRidgeScale * (trace_scale > 0.0 ? trace_scale : 1.0);
      gram.diagonal().array() += lambda;
      ldlt.compute(gram);
    }
    beta = ldlt.solve(rhs);
  }

  std::vector<double> weights(n);
  double intercept = y_mean;
  for (std::size_t j = 0; j < n; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    weights[j] = beta[col] / scale[col];
    intercept -= weights[j] * mean[col];
  }
  return LinearModel(std::move(weights), intercept, m, ridge);
}

/// Raw prediction w . x + b; never clamped to the quality domain.
inline double predict(const LinearModel& model, std::span<const double> features) {
  return model.predict(features);
}

/// Mean squared residual, accumulated with compensated summation.
inline double empirical_risk(const LinearModel& model, std::span<const LabeledSample> samples) {
  require(!samples.empty(), "dataset must be non-empty");
  CompensatedSum sum;
  for (const auto& s : samples) {
    const double r = s.target - model.predict(s.features);
    sum.add(r * r);
  }
  return sum.value() / static_cast<double>(samples.size());
}

/// Full refit on the newest `window_cap` samples (all samples when cap is 0).
inline LinearModel retrain(const LinearModel& /*previous*/, std::span<const LabeledSample> all_samples,
                           std::size_t window_cap = 0) {
  if (window_cap != 0 && all_samples.size() > window_cap) {
    all_samples = all_samples.subspan(all_samples.size() - window_cap);
  }
  return fit(all_samples);
}

// Sliding window holding the newest `capacity` samples in arrival order.
class TrainingWindow {
 public:
  explicit TrainingWindow(std::size_t capacity) : capacity_(capacity) {
    require(capacity > 0, "window capacity > 0");
  }

  void append(std::span<const LabeledSample> batch) {
    samples_.insert(samples_.end(), batch.begin(), batch.end());
    if (samples_.size() > capacity_) {
      samples_.erase(samples_.begin(),
                     samples_.begin() + static_cast<std::ptrdiff_t>(samples_.size() - capacity_));
    }
  }

  [[nodiscard]] std::span<const LabeledSample> samples() const noexcept { return samples_; }
  [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }

 private:
  std::size_t capacity_;
  std::vector<LabeledSample> samples_;
};

}  // namespace adaptbound::regression
