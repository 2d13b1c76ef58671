#include "dialsel/adam.hpp"

#include <cmath>

namespace dialsel {

AdamState::AdamState(AdamConfig cfg_in, std::span<Tensor* const> params)
    : cfg(cfg_in) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const Tensor* p : params) {
    m.push_back(Tensor::zeros(p->shape()));
    v.push_back(Tensor::zeros(p->shape()));
  }
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ShapeError("adam_step: parameter/gradient/state count mismatch");
  state.step += 1;
  const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    if (!p.same_shape(g))
      throw ShapeError("adam_step: gradient shape mismatch " + shape_pair_str(p, g));
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m.at(j) = b1 * m.at(j) + (1.0 - b1) * g.at(j);
      v.at(j) = b2 * v.at(j) + (1.0 - b2) * g.at(j) * g.at(j);
      const double mhat = m.at(j) / c1;
      const double vhat = v.at(j) / c2;
      p.at(j) -= state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
    }
  }
}

}  // namespace dialsel
