#include "pcgnet/error.hpp"
#include "pcgnet/metrics.hpp"

namespace pcgnet::train {

ConfusionCounts confusion(std::span<const double> scores, std::span<const double> labels, double tau) {
  if (scores.size() != labels.size())
    throw ValidationError("confusion: " + std::to_string(scores.size()) + " scores but " +
                          std::to_string(labels.size()) + " labels");
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= tau;
    const bool actual = labels[i] == 1.0;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {
double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }
}  // namespace

Metrics compute_metrics(const ConfusionCounts& c) {
  const auto tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const auto fn = static_cast<double>(c.fn), tn = static_cast<double>(c.tn);
  Metrics m;
  m.sensitivity = ratio(tp, tp + fn);
  m.specificity = ratio(tn, tn + fp);
  m.precision = ratio(tp, tp + fp);
  m.f1 = ratio(2.0 * m.precision * m.sensitivity, m.precision + m.sensitivity);
  m.accuracy = ratio(tp + tn, static_cast<double>(c.total()));
  return m;
}

}  // namespace pcgnet::train
