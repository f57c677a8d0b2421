#pragma once

#include <vector>

#include "mrf/tensor.hpp"

namespace mrf {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m, v;
  long step = 0;

  static AdamState like(const std::vector<Tensor*>& params);
  void update(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
              const AdamConfig& cfg);
};

}  // namespace mrf
