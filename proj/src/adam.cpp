#include "mrf/adam.hpp"

#include <cmath>

#include "mrf/errors.hpp"

namespace mrf {

AdamState AdamState::like(const std::vector<Tensor*>& params) {
  AdamState s;
  for (const Tensor* p : params) {
    s.m.emplace_back(p->rows(), p->cols(), 0.0);
    s.v.emplace_back(p->rows(), p->cols(), 0.0);
  }
  return s;
}

void AdamState::update(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                       const AdamConfig& cfg) {
  if (params.size() != grads.size() || params.size() != m.size())
    throw ShapeError("adam: parameter/gradient count mismatch");
  ++step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    if (!p.same_shape(g)) throw ShapeError("adam: gradient shape mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[i][j] = cfg.beta1 * m[i][j] + (1.0 - cfg.beta1) * g[j];
      v[i][j] = cfg.beta2 * v[i][j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double mh = m[i][j] / c1;
      const double vh = v[i][j] / c2;
      p[j] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
    }
  }
}

}  // namespace mrf
