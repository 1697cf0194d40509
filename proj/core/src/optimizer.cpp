#include <cmath>

#include "pcgnet/error.hpp"
#include "pcgnet/optimizer.hpp"

namespace pcgnet::train {

Adam::Adam(std::vector<ad::ParamPtr> params, AdamOptions opts) : opts_(opts) {
  if (!(opts_.lr >= 0.0)) throw ValidationError("adam: learning rate must be non-negative");
  for (auto& p : params) {
    Slot s;
    s.m.assign(p->value.size(), 0.0);
    s.v.assign(p->value.size(), 0.0);
    s.param = std::move(p);
    slots_.push_back(std::move(s));
  }
}

void Adam::zero_grad() {
  for (auto& s : slots_) s.param->zero_grad();
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (auto& s : slots_) {
    auto& p = *s.param;
    if (!p.trainable) continue;
    if (p.grad.size() != p.value.size() || s.m.size() != p.value.size())
      throw ValidationError("adam: gradient of '" + p.name + "' has " + std::to_string(p.grad.size()) +
                            " elements, parameter has " + std::to_string(p.value.size()));
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      s.m[i] = opts_.beta1 * s.m[i] + (1.0 - opts_.beta1) * g;
      s.v[i] = opts_.beta2 * s.v[i] + (1.0 - opts_.beta2) * g * g;
      const double m_hat = s.m[i] / c1;
      const double v_hat = s.v[i] / c2;
      p.value[i] -= opts_.lr * m_hat / (std::sqrt(v_hat) + opts_.eps);
    }
  }
}

}  // namespace pcgnet::train
