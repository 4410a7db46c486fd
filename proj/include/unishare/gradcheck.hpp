#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "unishare/tensor.hpp"

namespace unishare {

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool finite = true;
  std::string worst;  // "param[index]" of the worst element
};

// Central finite differences against analytic gradients.
//
// `loss` evaluates the scalar at the current parameter values; when its
// argument is true it must also leave the analytic gradient of every listed
// parameter in Parameter::grad (typically by running a tape backward).
// Gradients are compared element by element with relative error
// |a - n| / max(|a|, |n|, floor). The floor matters: central differences
// resolve a loss of order one only down to about 1e-10, so coordinates whose
// true gradient sits below the floor are effectively compared as zeros
// instead of amplifying that measurement noise.
inline GradCheckReport grad_check(const std::function<double(bool)>& loss,
                                  const std::vector<Parameter*>& params, double h = 1e-5,
                                  double floor = 1e-5) {
  GradCheckReport rep;
  for (Parameter* p : params) p->zero_grad();
  double base = loss(true);
  if (!std::isfinite(base)) {
    rep.finite = false;
    return rep;
  }
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  for (size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    for (size_t i = 0; i < p.value.data.size(); ++i) {
      double saved = p.value.data[i];
      p.value.data[i] = saved + h;
      double up = loss(false);
      p.value.data[i] = saved - h;
      double down = loss(false);
      p.value.data[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        rep.finite = false;
        return rep;
      }
      double numeric = (up - down) / (2.0 * h);
      double a = analytic[pi].data[i];
      double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      if (err > rep.max_rel_err) {
        rep.max_rel_err = err;
        rep.worst = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return rep;
}

}  // namespace unishare
