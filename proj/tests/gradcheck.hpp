#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "chgat/model.hpp"

namespace testing_support {

struct GroupCheck {
  double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double analytic_norm = 0.0;
  std::size_t coordinates = 0;
};

/// Central-difference check of d loss / d param for every coordinate of
/// every named parameter group.
inline std::map<std::string, GroupCheck> gradient_check(chgat::ParamStore& params,
                                                        const std::function<chgat::ad::Var()>& loss_fn,
                                                        double h = 1e-6) {
  params.zero_grad();
  loss_fn().backward();
  std::map<std::string, GroupCheck> out;
  for (const auto& entry : params.entries()) {
    chgat::ad::Var var = entry.var;
    auto& values = var.mutable_value();
    const auto analytic = var.grad();
    double diff2 = 0, a2 = 0, n2 = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + h;
      const double up = loss_fn().item();
      values[i] = orig - h;
      const double down = loss_fn().item();
      values[i] = orig;
      const double numeric = (up - down) / (2 * h);
      diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
      a2 += analytic[i] * analytic[i];
      n2 += numeric * numeric;
    }
    GroupCheck g;
    g.coordinates = values.size();
    g.analytic_norm = std::sqrt(a2);
    const double scale = std::max(std::sqrt(a2), std::sqrt(n2));
    g.relative_error = scale > 1e-12 ? std::sqrt(diff2) / scale : std::sqrt(diff2);
    out[entry.name] = g;
  }
  return out;
}

}  // namespace testing_support
