#include "latte/gradcheck.hpp"

#include <cmath>
#include <string>

namespace latte {

std::vector<double> finite_diff_gradient(const std::function<double(const std::vector<double>&)>& f,
                                         std::vector<double> theta, double eps) {
    if (!(eps > 0.0)) throw ValidationError("finite_diff_gradient: eps must be positive");
    std::vector<double> grad(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        double orig = theta[i];
        theta[i] = orig + eps;
        double fp = f(theta);
        theta[i] = orig - eps;
        double fm = f(theta);
        theta[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw Error("finite_diff_gradient: non-finite value at probe coordinate " +
                        std::to_string(i));
        grad[i] = (fp - fm) / (2.0 * eps);
    }
    return grad;
}

double max_rel_error(const std::vector<double>& a, const std::vector<double>& b, double abs_floor) {
    if (a.size() != b.size())
        throw ValidationError("max_rel_error: length mismatch " + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double denom = std::max({abs_floor, std::fabs(a[i]), std::fabs(b[i])});
        worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
    }
    return worst;
}

}  // namespace latte
