#include "wv/quadrature.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "wv/errors.hpp"

namespace wv::quad {

double integrate(const std::function<double(double)>& f, double lo, double hi, double abs_tol, double rel_tol) {
  if (lo == hi) return 0.0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  double err = 0.0, l1 = 0.0;
  // one panel first: turns the absolute tolerance into a relative one, since
  // the adaptive driver only understands relative targets
  GK::integrate(f, lo, hi, 0, rel_tol, &err, &l1);
  const double tol = std::max(rel_tol, 0.1 * abs_tol / std::max(l1, 1e-300));
  const double v = GK::integrate(f, lo, hi, 15, tol, &err, &l1);
  if (!std::isfinite(v)) throw ConvergenceError("quadrature produced a non-finite value", err);
  const double allowed = std::max(abs_tol, 10.0 * rel_tol * l1);
  if (err > allowed) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "quadrature on [%.6g, %.6g] missed tolerance: error estimate %.3g > %.3g", lo, hi,
                  err, allowed);
    throw ConvergenceError(buf, err);
  }
  return v;
}

double integrate_endpoint_singular(const std::function<double(double)>& f, double lo, double hi, double abs_tol,
                                   double rel_tol) {
  if (lo == hi) return 0.0;
  boost::math::quadrature::tanh_sinh<double> ts;
  double err = 0.0, l1 = 0.0;
  std::size_t levels = 0;
  const double v = ts.integrate(f, lo, hi, rel_tol, &err, &l1, &levels);
  if (!std::isfinite(v)) throw ConvergenceError("quadrature produced a non-finite value", err);
  const double allowed = std::max(abs_tol, 10.0 * rel_tol * l1);
  if (err > allowed) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "tanh-sinh on [%.6g, %.6g] missed tolerance: error estimate %.3g > %.3g", lo, hi,
                  err, allowed);
    throw ConvergenceError(buf, err);
  }
  return v;
}

}  // namespace wv::quad
