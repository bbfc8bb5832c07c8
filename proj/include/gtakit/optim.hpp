#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gtakit/tensor.hpp"

namespace gtakit {

// Decoupled-weight-decay Adam.
template <typename T>
struct AdamWState {
  std::vector<Tensor<T>> m, v;
  std::int64_t step = 0;
  double lr = 2e-4;
  double beta1 = 0.9, beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-3;
};

template <typename T>
void adamw_step(std::vector<Tensor<T>*>& params, const std::vector<Tensor<T>>& grads,
                AdamWState<T>& state) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adamw_step: parameter/gradient count mismatch");
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.emplace_back(p->shape);
      state.v.emplace_back(p->shape);
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t p = 0; p < params.size(); ++p) {
    auto& w = params[p]->data;
    const auto& g = grads[p].data;
    if (g.size() != w.size()) throw std::invalid_argument("adamw_step: gradient shape mismatch");
    auto& m = state.m[p].data;
    auto& v = state.v[p].data;
    for (size_t i = 0; i < w.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      const double mi = state.beta1 * static_cast<double>(m[i]) + (1.0 - state.beta1) * gi;
      const double vi = state.beta2 * static_cast<double>(v[i]) + (1.0 - state.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double mhat = mi / bc1, vhat = vi / bc2;
      double wi = static_cast<double>(w[i]);
      wi -= state.lr * (mhat / (std::sqrt(vhat) + state.eps) + state.weight_decay * wi);
      w[i] = static_cast<T>(wi);
    }
  }
}

struct GradCheckReport {
  double max_rel_err = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::string worst;  // "param <p> elem <i>"
};

// Compares analytic gradients against central finite differences.
// `loss_and_grads(grads)` evaluates the model at the current parameter
// values; when grads != nullptr it must also fill one gradient tensor per
// parameter. Relative error uses max(|analytic|, |numeric|, floor).
GradCheckReport gradient_check(
    std::vector<Tensor<double>*>& params,
    const std::function<double(std::vector<Tensor<double>>* grads)>& loss_and_grads, double tol,
    double h = 1e-5, double floor_ = 1e-4);

}  // namespace gtakit
