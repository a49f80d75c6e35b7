#pragma once

#include <functional>
#include <vector>

#include "latte/error.hpp"

namespace latte {

/// Central finite differences: (f(x+eps*e_i) - f(x-eps*e_i)) / (2 eps)
/// per coordinate. Rejects non-finite f values, naming the probe
/// coordinate. Independent of the tape machinery by construction.
std::vector<double> finite_diff_gradient(const std::function<double(const std::vector<double>&)>& f,
                                         std::vector<double> theta, double eps);

/// max relative error between two gradient vectors with an absolute
/// floor: |a-b| / max(floor, |a|, |b|).
double max_rel_error(const std::vector<double>& a, const std::vector<double>& b, double abs_floor);

}  // namespace latte
