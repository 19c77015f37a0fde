#pragma once

#include <functional>
#include <vector>

namespace zsl {

/// Compares an analytic gradient against central finite differences.
///
/// Returns max_k |g_a[k] - g_fd[k]| / max(1, |g_a[k]| + |g_fd[k]|) where
/// g_fd[k] = (f(theta + eps*e_k) - f(theta - eps*e_k)) / (2*eps).
/// Throws TrainingError naming the coordinate if f evaluates non-finite.
double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& analytic_grad,
                  const std::vector<double>& theta, double eps);

}  // namespace zsl
