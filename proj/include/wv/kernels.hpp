#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wv/errors.hpp"

/// Memory kernel families: closed-form evaluation, running integrals, norms
/// and epsilon -> 0 limits.
namespace wv::kernels {

enum class Family { zero, dirac, abel, exponential, mittag_leffler, limit_abel };

std::string_view to_string(Family f);
Family parse_family(std::string_view s);

/// Upper bound for the small parameter.
inline constexpr double kEpsBar = 10.0;

/// Algebraic description of a kernel. Only the parameters belonging to the
/// family are set; construct through the named factories.
///
///   dirac            eps * delta_0
///   abel             eps * tau^{-alpha} g_alpha
///   exponential      (1/eps) exp(-t/eps)
///   mittag_leffler   P eps^{-b} t^{b-1} E_{a,b}(-(t/eps)^a),
///                    P = (tau/eps)^{a-b}, or rho^{a-b} in fixed-ratio mode
///   limit_abel       tau^{-alpha} g_alpha   (the a < b limit, alpha = b - a)
struct KernelSpec {
  Family family = Family::zero;
  std::optional<double> a, b, alpha, eps, tau_theta, rho;
  bool fixed_ratio = false;

  static KernelSpec zero();
  static KernelSpec dirac(double eps);
  static KernelSpec abel(double alpha, double eps, double tau_theta = 1.0);
  static KernelSpec exponential(double eps);
  static KernelSpec mittag_leffler(double a, double b, double eps, double tau_theta = 1.0);
  static KernelSpec mittag_leffler_fixed_ratio(double a, double b, double eps, double rho);
  /// Exponent 0 is normalized to a unit Dirac mass.
  static KernelSpec limit_abel(double alpha, double tau_theta = 1.0);

  /// Copy with a different eps; error for families without one.
  KernelSpec with_eps(double eps) const;
  bool depends_on_eps() const;
  /// ML amplitude (tau/eps)^{a-b} or rho^{a-b}.
  double prefactor() const;
  /// Human-readable one-liner, e.g. "ml(a=0.5,b=0.75,eps=0.01,tau=1)".
  std::string describe() const;

  bool operator==(const KernelSpec&) const = default;
};

/// Throws DomainError when the parameter set does not fit the family.
void validate(const KernelSpec& spec);

/// True for kernels that are nonnegative on (0, inf).
bool is_nonnegative(const KernelSpec& spec);

/// Behaviour near t = 0: the kernel is ~ t^{exponent-1}; exponent 1 for
/// bounded kernels, 0 for Dirac, +inf for Zero.
double singularity_order(const KernelSpec& spec);

enum class GfeKind { gfe, gfe_i, gfe_ii, gfe_iii };
std::string_view to_string(GfeKind k);
GfeKind parse_gfe(std::string_view s);

struct GfeLaw {
  GfeKind law = GfeKind::gfe;
  double alpha = 0.5;
};

/// Mittag-Leffler parameters motivated by the Compte-Metzler flux laws:
/// GFE (alpha, alpha), GFE I (alpha, 2alpha-1), GFE II (alpha, 1), GFE III (1, alpha).
/// When rho is given and a > b the kernel is built in fixed-ratio mode.
KernelSpec from_gfe(const GfeLaw& law, double eps, double tau_theta = 1.0, std::optional<double> rho = {});

/// Point value for t > 0.
double eval(const KernelSpec& spec, double t);

/// Running integral (K * 1)(t).
double conv_one(const KernelSpec& spec, double t);

/// n-fold running integral: order 1 is conv_one, 2 is K*1*1, 3 is K*1*1*1.
double running_integral(const KernelSpec& spec, double t, int order);

struct KernelNorms {
  double l1_or_tv = 0.0;
  double conv1_l1 = 0.0;
  double T = 0.0;
};

KernelNorms norms(const KernelSpec& spec, double T);

/// Total variation of K on (0, T): closed form for nonnegative kernels,
/// adaptive quadrature of |K| between sign changes otherwise.
double total_variation(const KernelSpec& spec, double T);

/// Sign changes of a Mittag-Leffler kernel in (0, T).
std::vector<double> sign_changes(const KernelSpec& spec, double T);

/// Whether the epsilon -> 0 limit is defined for this kernel.
bool has_limit(const KernelSpec& spec);
KernelSpec limit_kernel(const KernelSpec& spec);
double predicted_rate(const KernelSpec& spec);

struct DiffConvOne {
  std::vector<double> t;
  std::vector<double> value;
  double l1 = 0.0;
};

/// ((K_eps - K_0) * 1) on a uniform grid of n_points over [0, T] and its
/// L1(0,T) norm.
DiffConvOne diff_conv_one(const KernelSpec& spec, double T, int n_points = 1000);

/// L1(0,T) norm of (K_eps - K_0) * 1 without the grid.
double diff_conv_one_l1(const KernelSpec& spec, double T);

/// Total variation of K_eps - K_0 on (0, T).
double tv_difference(const KernelSpec& spec, double T);

}  // namespace wv::kernels
