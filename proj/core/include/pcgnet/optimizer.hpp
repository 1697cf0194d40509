#pragma once

#include <cstdint>
#include <vector>

#include "pcgnet/autodiff.hpp"

namespace pcgnet::train {

struct AdamOptions {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Parameters whose `trainable` flag is off are
/// never touched, even if registered.
class Adam {
 public:
  Adam(std::vector<ad::ParamPtr> params, AdamOptions opts = {});

  void step();
  void zero_grad();
  std::uint64_t steps() const { return t_; }
  const AdamOptions& options() const { return opts_; }

 private:
  struct Slot {
    ad::ParamPtr param;
    std::vector<double> m, v;
  };
  std::vector<Slot> slots_;
  AdamOptions opts_;
  std::uint64_t t_ = 0;
};

}  // namespace pcgnet::train
