#pragma once

#include <functional>
#include <string>

#include "ndvad/tensor.hpp"

namespace ndvad {

// Central-difference gradient verification. fn must be a pure scalar-valued
// function of its argument; the analytic gradient is compared coordinate by
// coordinate and the maximum of |analytic - numeric| / max(1, |analytic|) is
// returned. A NaN anywhere raises a NumericError naming the coordinate.
double grad_check(const std::function<Tensor(const Tensor&)>& fn, const Tensor& point,
                  double eps);

// Same check for a scalar function of a whole parameter set; every entry is
// perturbed. When worst_param is non-null it receives "name[index]" of the
// worst coordinate.
double grad_check_params(const std::function<Tensor(const ParamSet&)>& fn, const ParamSet& params,
                         double eps, std::string* worst_param = nullptr);

}  // namespace ndvad
