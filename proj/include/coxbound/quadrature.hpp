#pragma once

#include <functional>
#include <vector>

namespace coxbound {

// Adaptive Simpson integration with absolute-error control; oracle-grade for
// smooth integrands between model breakpoints.
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                 int max_depth = 48);

// Sum of adaptive integrals over consecutive intervals split at the given
// points (breakpoints/atoms must be passed so smoothness holds per piece).
double integrate_piecewise(const std::function<double(double)>& f, const std::vector<double>& cuts,
                           double tol = 1e-12);

}  // namespace coxbound
