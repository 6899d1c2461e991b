#pragma once

#include <functional>

namespace wv::quad {

/// Adaptive 61-point Gauss-Kronrod on [lo, hi]. Throws ConvergenceError when
/// the error estimate exceeds max(abs_tol, rel_tol * integral of |f|).
double integrate(const std::function<double(double)>& f, double lo, double hi, double abs_tol = 1e-10,
                 double rel_tol = 1e-12);

/// Tanh-sinh rule for integrands with algebraic endpoint singularities
/// (t^{beta}, beta > -1). Same error contract as integrate().
double integrate_endpoint_singular(const std::function<double(double)>& f, double lo, double hi,
                                   double abs_tol = 1e-10, double rel_tol = 1e-12);

}  // namespace wv::quad
