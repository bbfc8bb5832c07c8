#include "gtakit/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace gtakit {

GradCheckReport gradient_check(
    std::vector<Tensor<double>*>& params,
    const std::function<double(std::vector<Tensor<double>>* grads)>& loss_and_grads, double tol,
    double h, double floor_) {
  std::vector<Tensor<double>> analytic;
  const double base = loss_and_grads(&analytic);
  if (!std::isfinite(base)) throw std::runtime_error("gradient_check: non-finite loss");
  if (analytic.size() != params.size())
    throw std::runtime_error("gradient_check: closure filled wrong gradient count");

  GradCheckReport report;
  report.tol = tol;
  for (size_t p = 0; p < params.size(); ++p) {
    auto& w = params[p]->data;
    for (size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + h;
      const double up = loss_and_grads(nullptr);
      w[i] = saved - h;
      const double down = loss_and_grads(nullptr);
      w[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw std::runtime_error("gradient_check: non-finite loss during perturbation");
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[p].data[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor_});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = "param " + std::to_string(p) + " elem " + std::to_string(i);
      }
    }
  }
  report.pass = report.max_rel_err < tol;
  return report;
}

}  // namespace gtakit
