#pragma once

#include <cstddef>
#include <span>

#include "pcgnet/autodiff.hpp"

namespace pcgnet::train {

enum class DeltaSource { kFixed, kTrackThreshold };

struct PwlConfig {
  double alpha = 0.87;
  DeltaSource delta_source = DeltaSource::kTrackThreshold;
  double fixed_delta = 0.5;

  void validate() const;
};

/// Threshold-relative misclassification counts of a batch. Both comparisons
/// are inclusive: a prediction exactly at delta counts as a false negative for
/// label 1 and as a false positive for label 0.
struct MisclassificationIndex {
  std::size_t fni = 0;  // #{ y_hat <= delta and y == 1 }
  std::size_t fpi = 0;  // #{ y_hat >= delta and y == 0 }
};

MisclassificationIndex fni_fpi(std::span<const double> y_hat, std::span<const double> y, double delta);

/// 1 + alpha * FNI + (1 - alpha) * FPI
double penalty_factor(const MisclassificationIndex& idx, double alpha);

/// -(1/B) sum[y log y_hat + (1 - y) log(1 - y_hat)], y_hat clamped to [1e-7, 1 - 1e-7].
ad::Var bce_loss(ad::Var y_hat, std::span<const double> y);

struct PwlLoss {
  ad::Var loss;        // penalty * BCE
  double penalty = 1;  // detached batch constant
  MisclassificationIndex counts;
  double bce = 0;
};

/// Penalty-weighted BCE. The penalty is computed from the current predictions
/// but carries no gradient, so d(PWL)/d(y_hat) = penalty * d(BCE)/d(y_hat).
PwlLoss pwl_loss(ad::Var y_hat, std::span<const double> y, const PwlConfig& cfg, double delta);

}  // namespace pcgnet::train
