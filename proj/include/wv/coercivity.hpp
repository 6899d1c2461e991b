#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "wv/kernels.hpp"

/// Numerical checks of the uniform bound and the coercivity inequality
///   int_0^t (K*y) y  >=  C_K int_0^t |K*y|^2
/// for the kernel catalog.
namespace wv::coercivity {

using kernels::KernelSpec;

enum class Method { fourier, resolvent, quadratic_form };
std::string_view to_string(Method m);

struct CoercivityReport {
  double a1_bound = 0.0;
  bool a1_uniform = false;
  double c_frakK = 0.0;
  Method method = Method::quadratic_form;
  std::vector<double> eps_grid;
  std::vector<double> a1_values;
  std::vector<double> c_values;
  std::map<std::string, double> details;
  std::string note;
};

/// 2 pi (tau/eps)^{b-a} inf_{w>0} Re((iw)^b + (iw)^{b-a}), closed form; 2 pi when a = b.
double fourier_constant(double a, double b, double tau_theta, double eps);

/// Re m(w) = 2 pi P^{-1} Re((i eps w)^b + (i eps w)^{b-a}) for ML kernels with b <= a
/// and the exponential kernel.
double re_m(const KernelSpec& spec, double omega);

struct Infimum {
  double omega_star = 0.0;
  double value = 0.0;
};

/// Grid search (4096 log-spaced points) plus golden-section refinement. When
/// the minimum sits on the lower edge the range is extended downwards.
Infimum re_m_infimum(const KernelSpec& spec, double omega_lo = 1e-6, double omega_hi = 1e6);

/// coef * g_order, the completely monotone part of a resolvent.
struct PowerTail {
  double coef = 0.0;
  double order = 1.0;
};

/// r = A delta_0 + sum of power tails, with K * r = 1.
struct Resolvent {
  double point_mass = 0.0;
  std::vector<PowerTail> tail;
  bool boundary_case = false;

  /// Value of the tail at t > 0.
  double tail_at(double t) const;
};

Resolvent resolvent_of(const KernelSpec& spec);

/// max over t_i = T i / n of |(K * r)(t_i) - 1|, using closed-form
/// convolutions of power kernels.
double verify_resolvent(const KernelSpec& spec, const Resolvent& res, double T, int n_points);

/// (K * c g_beta)(t) in closed form.
double conv_with_power(const KernelSpec& spec, double coef, double beta, double t);

/// Reference coercivity constant and the method it comes from:
/// Fourier infimum / 2 pi for b <= a and the exponential kernel, the resolvent
/// tail value r(T) (plus nothing from the point mass) otherwise.
double reference_constant(const KernelSpec& spec, double T, Method* method = nullptr);

/// Both sides of the inequality for a piecewise-constant signal (value y[j] on
/// [jh, (j+1)h)), evaluated at every node t_m = m h, m = 1..N.
struct QuadraticSides {
  std::vector<double> lhs;  // int_0^{t_m} (K*y) y
  std::vector<double> rhs;  // int_0^{t_m} |K*y|^2
  std::vector<double> w;    // (K*y)(t_m)
};

QuadraticSides quadratic_form_sides(const KernelSpec& spec, const std::vector<double>& y, double h);

struct QuadraticFormResult {
  double min_ratio = 0.0;        // dt-extrapolated, min over signals and times
  double min_ratio_coarse = 0.0; // at dt
  double min_ratio_fine = 0.0;   // at dt/2
  double c_reference = 0.0;
  Method method = Method::quadratic_form;
  int n_signals = 0;
  std::vector<double> per_signal;  // extrapolated minimum for each signal
};

/// Random smooth (16-mode trigonometric) and step signals; 4 of every 5 are smooth.
QuadraticFormResult quadratic_form_test(const KernelSpec& spec, double T, int n_samples, double dt,
                                        std::uint64_t seed = 20240611);

/// Tabulates the total variation over a decreasing eps grid, flags
/// uniform boundedness and the smallest reference constant.
CoercivityReport a1_report(const KernelSpec& family, const std::vector<double>& eps_grid, double T);

}  // namespace wv::coercivity
