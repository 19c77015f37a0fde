#include "zsl/gradcheck.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "zsl/errors.hpp"

namespace zsl {

double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& analytic_grad,
                  const std::vector<double>& theta, double eps) {
    if (eps <= 0.0) {
        throw std::invalid_argument("grad_check: eps must be positive");
    }
    if (analytic_grad.size() != theta.size()) {
        throw std::invalid_argument("grad_check: gradient size " +
                                    std::to_string(analytic_grad.size()) +
                                    " != parameter size " + std::to_string(theta.size()));
    }
    std::vector<double> probe = theta;
    double worst = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        probe[k] = theta[k] + eps;
        const double fp = f(probe);
        probe[k] = theta[k] - eps;
        const double fm = f(probe);
        probe[k] = theta[k];
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw TrainingError("grad_check: non-finite evaluation at coordinate " +
                                std::to_string(k));
        }
        const double g_fd = (fp - fm) / (2.0 * eps);
        const double g_a = analytic_grad[k];
        const double denom = std::max(1.0, std::fabs(g_a) + std::fabs(g_fd));
        const double rel = std::fabs(g_a - g_fd) / denom;
        if (rel > worst) worst = rel;
    }
    return worst;
}

}  // namespace zsl
