#include "ndvad/gradcheck.hpp"

#include <cmath>

#include "ndvad/autodiff.hpp"
#include "ndvad/ops.hpp"

namespace ndvad {

namespace {

// Probes stay grad-capable leaves: fn may itself differentiate internally
// (gradient-through-gradient checks), so only the outer backward is skipped.
double eval_scalar(const std::function<Tensor(const Tensor&)>& fn, const Tensor& p) {
  Tensor v = fn(p);
  if (v.numel() != 1) throw ContractError("grad_check: fn must be scalar-valued");
  return v.item();
}

Tensor perturbed(const Tensor& point, std::int64_t i, double delta) {
  std::vector<double> d = point.data();
  d[static_cast<std::size_t>(i)] += delta;
  return Tensor::from(std::move(d), point.shape(), point.dtype(), true);
}

}  // namespace

double grad_check(const std::function<Tensor(const Tensor&)>& fn, const Tensor& point,
                  double eps) {
  Tensor p = point.detached(true);
  Tensor loss = fn(p);
  if (loss.numel() != 1) throw ContractError("grad_check: fn must be scalar-valued");
  backward(loss);
  Tensor g = p.grad();
  std::vector<double> analytic(static_cast<std::size_t>(point.numel()), 0.0);
  if (g.defined()) analytic = g.data();

  double worst = 0.0;
  for (std::int64_t i = 0; i < point.numel(); ++i) {
    double fp = eval_scalar(fn, perturbed(point, i, eps));
    double fm = eval_scalar(fn, perturbed(point, i, -eps));
    double numeric = (fp - fm) / (2.0 * eps);
    double a = analytic[static_cast<std::size_t>(i)];
    if (!std::isfinite(numeric) || !std::isfinite(a)) {
      throw NumericError("grad_check: NaN/Inf at coordinate " + std::to_string(i));
    }
    double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
    worst = std::max(worst, err);
  }
  return worst;
}

double grad_check_params(const std::function<Tensor(const ParamSet&)>& fn, const ParamSet& params,
                         double eps, std::string* worst_param) {
  ParamSet live;
  for (const auto& [name, value] : params) live.emplace(name, value.detached(true));

  Tensor loss = fn(live);
  if (loss.numel() != 1) throw ContractError("grad_check_params: fn must be scalar-valued");
  backward(loss);

  double worst = 0.0;
  for (const auto& [name, value] : live) {
    Tensor g = value.grad();
    for (std::int64_t i = 0; i < value.numel(); ++i) {
      auto eval_at = [&](double delta) {
        ParamSet probe;
        for (const auto& [n2, v2] : live) {
          probe.emplace(n2, n2 == name ? [&] {
            std::vector<double> d = v2.data();
            d[static_cast<std::size_t>(i)] += delta;
            return Tensor::from(std::move(d), v2.shape(), v2.dtype(), true);
          }() : v2.detached(true));
        }
        return fn(probe).item();
      };
      double numeric = (eval_at(eps) - eval_at(-eps)) / (2.0 * eps);
      double a = g.defined() ? g.at(i) : 0.0;
      if (!std::isfinite(numeric) || !std::isfinite(a)) {
        throw NumericError("grad_check_params: NaN/Inf at " + name + "[" + std::to_string(i) +
                           "]");
      }
      double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      if (err > worst) {
        worst = err;
        if (worst_param) *worst_param = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return worst;
}

}  // namespace ndvad
