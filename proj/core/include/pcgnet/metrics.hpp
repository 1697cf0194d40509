#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace pcgnet::train {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t total() const { return tp + fp + fn + tn; }
  std::size_t positives() const { return tp + fn; }
  std::size_t negatives() const { return tn + fp; }
};

/// A score at or above tau is a positive prediction.
ConfusionCounts confusion(std::span<const double> scores, std::span<const double> labels, double tau);

struct Metrics {
  double f1 = 0, accuracy = 0, sensitivity = 0, specificity = 0, precision = 0;
};

/// Any 0/0 ratio is reported as 0.
Metrics compute_metrics(const ConfusionCounts& counts);

}  // namespace pcgnet::train
