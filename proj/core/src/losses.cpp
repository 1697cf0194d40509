#include <sstream>

#include "pcgnet/error.hpp"
#include "pcgnet/losses.hpp"

namespace pcgnet::train {

void PwlConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("pwl alpha must lie in (0, 1), got " + std::to_string(alpha));
  if (!(fixed_delta >= 0.0 && fixed_delta <= 1.0))
    throw ValidationError("pwl delta must lie in [0, 1], got " + std::to_string(fixed_delta));
}

MisclassificationIndex fni_fpi(std::span<const double> y_hat, std::span<const double> y, double delta) {
  if (y_hat.size() != y.size())
    throw ValidationError("fni_fpi: " + std::to_string(y_hat.size()) + " predictions but " +
                          std::to_string(y.size()) + " labels");
  MisclassificationIndex idx;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 1.0 && y_hat[i] <= delta) ++idx.fni;
    if (y[i] == 0.0 && y_hat[i] >= delta) ++idx.fpi;
  }
  return idx;
}

double penalty_factor(const MisclassificationIndex& idx, double alpha) {
  return 1.0 + alpha * static_cast<double>(idx.fni) + (1.0 - alpha) * static_cast<double>(idx.fpi);
}

ad::Var bce_loss(ad::Var y_hat, std::span<const double> y) {
  for (double v : y)
    if (v != 0.0 && v != 1.0) throw ValidationError("bce_loss: labels must be 0 or 1");
  return ad::bce(y_hat, y);
}

PwlLoss pwl_loss(ad::Var y_hat, std::span<const double> y, const PwlConfig& cfg, double delta) {
  cfg.validate();
  ad::Var base = bce_loss(y_hat, y);
  PwlLoss out;
  out.counts = fni_fpi(y_hat.value(), y, delta);
  out.penalty = penalty_factor(out.counts, cfg.alpha);
  out.bce = base.item();
  out.loss = ad::scale(base, out.penalty);
  return out;
}

}  // namespace pcgnet::train
