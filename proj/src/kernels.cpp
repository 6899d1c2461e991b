#include "wv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wv/mlf.hpp"
#include "wv/quadrature.hpp"

namespace wv::kernels {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double req(const std::optional<double>& v, const char* name) {
  if (!v) throw DomainError(std::string("kernel parameter '") + name + "' is not set");
  return *v;
}

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < kEpsBar))
    throw DomainError("eps must lie in (0, " + std::to_string(kEpsBar) + "), got " + std::to_string(eps));
}

void check_unit(double v, const char* name) {
  if (!(v > 0.0 && v <= 1.0))
    throw DomainError(std::string(name) + " must lie in (0,1], got " + std::to_string(v));
}

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw DomainError(std::string(name) + " must be positive, got " + std::to_string(v));
}

double factorial(int n) { return std::tgamma(n + 1.0); }

// Zeros in (0, T) of t -> E_{a,beta}(-(t/eps)^a), located on a log grid in
// x = (t/eps)^a and refined by bisection.
std::vector<double> ml_zero_crossings(double a, double beta, double eps, double T) {
  std::vector<double> out;
  const double xmax = std::pow(T / eps, a);
  const int n = 2000;
  double xprev = 0.0, vprev = mlf::rgamma(beta);
  for (int i = 1; i <= n; ++i) {
    const double x = xmax * std::pow(1e-8, 1.0 - double(i) / n);
    const double v = mlf::ml(a, beta, x);
    if ((v < 0.0) != (vprev < 0.0) && v != 0.0) {
      double lo = xprev, hi = x;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((mlf::ml(a, beta, mid) < 0.0) == (vprev < 0.0)) lo = mid; else hi = mid;
      }
      out.push_back(eps * std::pow(0.5 * (lo + hi), 1.0 / a));
    }
    xprev = x;
    vprev = v;
  }
  return out;
}

// Integral over (0, T) of |coef * t^{beta-1} E_{a,beta}(-(t/eps)^a)|, split at
// sign changes and graded geometrically from eps upwards.
double abs_ml_integral(double a, double beta, double eps, double coef, double T) {
  auto f = [=](double t) {
    if (t <= 0.0) return 0.0;
    return coef * std::pow(t, beta - 1.0) * mlf::ml(a, beta, std::pow(t / eps, a));
  };
  const double regime_edges[] = {eps, eps * std::pow(1e5, 1.0 / a)};
  std::vector<double> cuts{0.0};
  for (double z : ml_zero_crossings(a, beta, eps, T)) cuts.push_back(z);
  cuts.push_back(T);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double lo = cuts[i];
    const double end = cuts[i + 1];
    double piece = 0.0;
    if (lo == 0.0) {
      const double hi = std::min(eps, end);
      // t = u^{1/beta} removes the t^{beta-1} singularity before the endpoint rule
      const double q = 1.0 / beta;
      auto g = [&](double u) { return u <= 0.0 ? 0.0 : f(std::pow(u, q)) * q * std::pow(u, q - 1.0); };
      piece += quad::integrate_endpoint_singular(g, 0.0, std::pow(hi, beta), 1e-10, 1e-12);
      lo = hi;
    }
    while (lo < end) {
      double hi = std::min(lo * 10.0, end);
      // panels must not straddle a switch of the evaluation regime
      for (double edge : regime_edges)
        if (edge > lo * (1.0 + 1e-12) && edge < hi) hi = edge;
      piece += quad::integrate(f, lo, hi, 1e-10, 1e-10);
      lo = hi;
    }
    total += std::abs(piece);
  }
  return total;
}

// Integral over (0, T) graded geometrically from `scale`; f may be singular at 0.
double graded_integral(const std::function<double(double)>& f, double T, double scale) {
  double total = 0.0;
  double lo = 0.0;
  double hi = std::min(scale, T);
  total += quad::integrate_endpoint_singular(f, lo, hi, 1e-10, 1e-12);
  while (hi < T) {
    lo = hi;
    hi = std::min(hi * 10.0, T);
    total += quad::integrate(f, lo, hi, 1e-10, 1e-12);
  }
  return total;
}

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::zero: return "zero";
    case Family::dirac: return "dirac";
    case Family::abel: return "abel";
    case Family::exponential: return "exponential";
    case Family::mittag_leffler: return "ml";
    case Family::limit_abel: return "limit_abel";
  }
  return "?";
}

Family parse_family(std::string_view s) {
  if (s == "zero") return Family::zero;
  if (s == "dirac") return Family::dirac;
  if (s == "abel") return Family::abel;
  if (s == "exponential" || s == "exp") return Family::exponential;
  if (s == "ml" || s == "mittag_leffler" || s == "mittag-leffler") return Family::mittag_leffler;
  if (s == "limit_abel" || s == "limit-abel") return Family::limit_abel;
  throw DomainError("unknown kernel family '" + std::string(s) + "'");
}

KernelSpec KernelSpec::zero() { return {}; }

KernelSpec KernelSpec::dirac(double eps) {
  KernelSpec k;
  k.family = Family::dirac;
  k.eps = eps;
  validate(k);
  return k;
}

KernelSpec KernelSpec::abel(double alpha, double eps, double tau_theta) {
  KernelSpec k;
  k.family = Family::abel;
  k.alpha = alpha;
  k.eps = eps;
  k.tau_theta = tau_theta;
  validate(k);
  return k;
}

KernelSpec KernelSpec::exponential(double eps) {
  KernelSpec k;
  k.family = Family::exponential;
  k.eps = eps;
  validate(k);
  return k;
}

KernelSpec KernelSpec::mittag_leffler(double a, double b, double eps, double tau_theta) {
  KernelSpec k;
  k.family = Family::mittag_leffler;
  k.a = a;
  k.b = b;
  k.eps = eps;
  k.tau_theta = tau_theta;
  validate(k);
  return k;
}

KernelSpec KernelSpec::mittag_leffler_fixed_ratio(double a, double b, double eps, double rho) {
  KernelSpec k;
  k.family = Family::mittag_leffler;
  k.a = a;
  k.b = b;
  k.eps = eps;
  k.rho = rho;
  k.fixed_ratio = true;
  validate(k);
  return k;
}

KernelSpec KernelSpec::limit_abel(double alpha, double tau_theta) {
  if (alpha == 0.0) return dirac(1.0);
  KernelSpec k;
  k.family = Family::limit_abel;
  k.alpha = alpha;
  k.tau_theta = tau_theta;
  validate(k);
  return k;
}

KernelSpec KernelSpec::with_eps(double e) const {
  if (!depends_on_eps()) throw UnsupportedOperation("kernel '" + describe() + "' has no eps parameter");
  KernelSpec k = *this;
  k.eps = e;
  validate(k);
  return k;
}

bool KernelSpec::depends_on_eps() const { return family != Family::zero && family != Family::limit_abel; }

double KernelSpec::prefactor() const {
  if (family == Family::exponential) return 1.0;
  if (family != Family::mittag_leffler) throw UnsupportedOperation("prefactor is defined for ML kernels only");
  const double a_ = *a, b_ = *b;
  if (fixed_ratio) return std::pow(*rho, a_ - b_);
  return std::pow(*tau_theta / *eps, a_ - b_);
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  os.precision(6);
  os << to_string(family);
  bool first = true;
  auto field = [&](const char* name, const std::optional<double>& v) {
    if (!v) return;
    os << (first ? "(" : ",") << name << "=" << *v;
    first = false;
  };
  field("a", a);
  field("b", b);
  field("alpha", alpha);
  field("eps", eps);
  field("tau", tau_theta);
  field("rho", rho);
  if (!first) os << ")";
  return os.str();
}

void validate(const KernelSpec& k) {
  auto forbid = [&](const std::optional<double>& v, const char* name) {
    if (v) throw DomainError(std::string("parameter '") + name + "' does not belong to family " +
                             std::string(to_string(k.family)));
  };
  if (k.fixed_ratio && k.family != Family::mittag_leffler)
    throw DomainError("fixed-ratio mode applies to ML kernels only");
  switch (k.family) {
    case Family::zero:
      forbid(k.a, "a"); forbid(k.b, "b"); forbid(k.alpha, "alpha"); forbid(k.eps, "eps");
      forbid(k.tau_theta, "tau_theta"); forbid(k.rho, "rho");
      break;
    case Family::dirac:
      forbid(k.a, "a"); forbid(k.b, "b"); forbid(k.alpha, "alpha"); forbid(k.tau_theta, "tau_theta");
      forbid(k.rho, "rho");
      check_eps(req(k.eps, "eps"));
      break;
    case Family::exponential:
      forbid(k.a, "a"); forbid(k.b, "b"); forbid(k.alpha, "alpha"); forbid(k.tau_theta, "tau_theta");
      forbid(k.rho, "rho");
      check_eps(req(k.eps, "eps"));
      break;
    case Family::abel:
      forbid(k.a, "a"); forbid(k.b, "b"); forbid(k.rho, "rho");
      check_unit(req(k.alpha, "alpha"), "alpha");
      check_eps(req(k.eps, "eps"));
      check_positive(req(k.tau_theta, "tau_theta"), "tau_theta");
      break;
    case Family::limit_abel:
      forbid(k.a, "a"); forbid(k.b, "b"); forbid(k.eps, "eps"); forbid(k.rho, "rho");
      check_unit(req(k.alpha, "alpha"), "alpha");
      check_positive(req(k.tau_theta, "tau_theta"), "tau_theta");
      break;
    case Family::mittag_leffler:
      forbid(k.alpha, "alpha");
      check_unit(req(k.a, "a"), "a");
      check_unit(req(k.b, "b"), "b");
      check_eps(req(k.eps, "eps"));
      if (k.fixed_ratio) {
        forbid(k.tau_theta, "tau_theta");
        check_positive(req(k.rho, "rho"), "rho");
      } else {
        forbid(k.rho, "rho");
        check_positive(req(k.tau_theta, "tau_theta"), "tau_theta");
      }
      break;
  }
}

bool is_nonnegative(const KernelSpec& k) {
  return k.family != Family::mittag_leffler || *k.b >= *k.a;
}

double singularity_order(const KernelSpec& k) {
  switch (k.family) {
    case Family::zero: return kInf;
    case Family::dirac: return 0.0;
    case Family::exponential: return 1.0;
    case Family::abel:
    case Family::limit_abel: return *k.alpha;
    case Family::mittag_leffler: return *k.b;
  }
  return 1.0;
}

std::string_view to_string(GfeKind k) {
  switch (k) {
    case GfeKind::gfe: return "GFE";
    case GfeKind::gfe_i: return "GFE_I";
    case GfeKind::gfe_ii: return "GFE_II";
    case GfeKind::gfe_iii: return "GFE_III";
  }
  return "?";
}

GfeKind parse_gfe(std::string_view s) {
  if (s == "GFE" || s == "gfe") return GfeKind::gfe;
  if (s == "GFE_I" || s == "gfe_i" || s == "GFE I" || s == "gfe1") return GfeKind::gfe_i;
  if (s == "GFE_II" || s == "gfe_ii" || s == "GFE II" || s == "gfe2") return GfeKind::gfe_ii;
  if (s == "GFE_III" || s == "gfe_iii" || s == "GFE III" || s == "gfe3") return GfeKind::gfe_iii;
  throw DomainError("unknown GFE law '" + std::string(s) + "'");
}

KernelSpec from_gfe(const GfeLaw& law, double eps, double tau_theta, std::optional<double> rho) {
  const double al = law.alpha;
  check_unit(al, "alpha");
  double a = al, b = al;
  switch (law.law) {
    case GfeKind::gfe: break;
    case GfeKind::gfe_i:
      if (!(al > 0.5)) throw DomainError("GFE I requires alpha > 1/2, got " + std::to_string(al));
      b = 2.0 * al - 1.0;
      break;
    case GfeKind::gfe_ii: b = 1.0; break;
    case GfeKind::gfe_iii: a = 1.0; break;
  }
  if (rho && a > b) return KernelSpec::mittag_leffler_fixed_ratio(a, b, eps, *rho);
  return KernelSpec::mittag_leffler(a, b, eps, tau_theta);
}

double eval(const KernelSpec& k, double t) {
  if (k.family == Family::dirac) throw UnsupportedOperation("a Dirac mass has no point values");
  if (t < 0.0) throw DomainError("kernel evaluated at negative time");
  if (t == 0.0 && singularity_order(k) < 1.0) throw SingularityError("kernel is unbounded at t = 0");
  switch (k.family) {
    case Family::zero: return 0.0;
    case Family::abel:
      return mlf::abel_eval({*k.alpha, *k.eps * std::pow(*k.tau_theta, -*k.alpha)}, t);
    case Family::limit_abel: return mlf::abel_eval({*k.alpha, std::pow(*k.tau_theta, -*k.alpha)}, t);
    case Family::exponential: return std::exp(-t / *k.eps) / *k.eps;
    case Family::mittag_leffler: {
      const double a = *k.a, b = *k.b, e = *k.eps;
      const double x = std::pow(t / e, a);
      if (t == 0.0) return k.prefactor() / e * mlf::rgamma(b);
      return k.prefactor() * std::pow(e, -b) * std::pow(t, b - 1.0) * mlf::ml(a, b, x);
    }
    case Family::dirac: break;
  }
  return 0.0;
}

double running_integral(const KernelSpec& k, double t, int order) {
  if (order < 1 || order > 3) throw DomainError("running integral order must be 1, 2 or 3");
  if (t < 0.0) throw DomainError("running integral over negative interval");
  if (t == 0.0) return 0.0;
  switch (k.family) {
    case Family::zero: return 0.0;
    case Family::dirac: return *k.eps * std::pow(t, order - 1) / factorial(order - 1);
    case Family::abel:
      return *k.eps * std::pow(*k.tau_theta, -*k.alpha) * std::pow(t, *k.alpha + order - 1) *
             mlf::rgamma(*k.alpha + order);
    case Family::limit_abel:
      return std::pow(*k.tau_theta, -*k.alpha) * std::pow(t, *k.alpha + order - 1) * mlf::rgamma(*k.alpha + order);
    case Family::exponential: {
      const double e = *k.eps;
      if (order == 1) return -std::expm1(-t / e);
      return std::pow(e, order - 1) * std::pow(t / e, order) * mlf::ml(1.0, 1.0 + order, t / e);
    }
    case Family::mittag_leffler: {
      const double a = *k.a, b = *k.b, e = *k.eps;
      return k.prefactor() * std::pow(e, order - 1) * std::pow(t / e, b + order - 1) *
             mlf::ml(a, b + order, std::pow(t / e, a));
    }
  }
  return 0.0;
}

double conv_one(const KernelSpec& k, double t) { return running_integral(k, t, 1); }

double total_variation(const KernelSpec& k, double T) {
  if (!(T > 0.0)) throw DomainError("T must be positive");
  switch (k.family) {
    case Family::zero: return 0.0;
    case Family::dirac: return *k.eps;
    case Family::mittag_leffler:
      if (!is_nonnegative(k)) return abs_ml_integral(*k.a, *k.b, *k.eps, k.prefactor() * std::pow(*k.eps, -*k.b), T);
      return conv_one(k, T);
    default: return conv_one(k, T);
  }
}

std::vector<double> sign_changes(const KernelSpec& k, double T) {
  if (k.family != Family::mittag_leffler || is_nonnegative(k)) return {};
  return ml_zero_crossings(*k.a, *k.b, *k.eps, T);
}

KernelNorms norms(const KernelSpec& k, double T) {
  if (!(T > 0.0)) throw DomainError("T must be positive");
  KernelNorms n;
  n.T = T;
  n.l1_or_tv = total_variation(k, T);
  switch (k.family) {
    case Family::zero: n.conv1_l1 = 0.0; break;
    case Family::dirac: n.conv1_l1 = *k.eps * T; break;
    default: {
      const double scale = k.eps ? *k.eps : T;
      n.conv1_l1 = graded_integral([&](double t) { return std::abs(conv_one(k, t)); }, T, scale);
    }
  }
  return n;
}

bool has_limit(const KernelSpec& k) {
  switch (k.family) {
    case Family::zero:
    case Family::dirac:
    case Family::abel:
    case Family::exponential: return true;
    case Family::mittag_leffler: return *k.a <= *k.b || k.fixed_ratio;
    case Family::limit_abel: return false;
  }
  return false;
}

KernelSpec limit_kernel(const KernelSpec& k) {
  if (!has_limit(k)) {
    if (k.family == Family::mittag_leffler)
      throw UnsupportedOperation("ML kernel with a > b has an eps -> 0 limit only in fixed-ratio mode");
    throw UnsupportedOperation("kernel '" + k.describe() + "' is already an eps -> 0 limit");
  }
  switch (k.family) {
    case Family::exponential: return KernelSpec::dirac(1.0);
    case Family::mittag_leffler: {
      const double a = *k.a, b = *k.b;
      if (a > b) return KernelSpec::zero();
      if (k.fixed_ratio) throw UnsupportedOperation("fixed-ratio ML with a <= b has no eps -> 0 limit");
      return KernelSpec::limit_abel(b - a, *k.tau_theta);
    }
    default: return KernelSpec::zero();
  }
}

double predicted_rate(const KernelSpec& k) {
  const KernelSpec lim = limit_kernel(k);
  if (k.family == Family::exponential) return 0.5;
  if (k.family == Family::mittag_leffler) {
    const double a = *k.a, b = *k.b;
    return a <= b ? a / 2.0 : (a - b) / 2.0;
  }
  (void)lim;
  return 1.0;
}

namespace {

bool limit_is_zero(const KernelSpec& k) { return limit_kernel(k).family == Family::zero; }

// (a, b, tau-factor) of the ML representation used for a <= b differences.
struct MlView {
  double a, b, tau_factor, eps;
};

MlView ml_view(const KernelSpec& k) {
  if (k.family == Family::exponential) return {1.0, 1.0, 1.0, *k.eps};
  return {*k.a, *k.b, std::pow(*k.tau_theta, *k.a - *k.b), *k.eps};
}

}  // namespace

DiffConvOne diff_conv_one(const KernelSpec& k, double T, int n_points) {
  if (!(T > 0.0)) throw DomainError("T must be positive");
  if (n_points < 2) throw DomainError("diff_conv_one needs at least two grid points");
  DiffConvOne out;
  out.t.resize(n_points);
  out.value.resize(n_points);
  const bool zero_limit = limit_is_zero(k);
  for (int i = 0; i < n_points; ++i) {
    const double t = T * i / (n_points - 1);
    out.t[i] = t;
    if (zero_limit) {
      out.value[i] = conv_one(k, t);
    } else {
      const MlView v = ml_view(k);
      const double x = std::pow(t / v.eps, v.a);
      out.value[i] = -v.tau_factor * (t == 0.0 ? (v.a == v.b ? 1.0 : 0.0)
                                               : std::pow(t, v.b - v.a) * mlf::ml(v.a, 1.0 + v.b - v.a, x));
    }
  }
  out.l1 = diff_conv_one_l1(k, T);
  return out;
}

double diff_conv_one_l1(const KernelSpec& k, double T) {
  if (limit_is_zero(k)) {
    if (k.family == Family::zero) return 0.0;
    return running_integral(k, T, 2);
  }
  const MlView v = ml_view(k);
  return v.tau_factor * std::pow(T, 1.0 + v.b - v.a) * mlf::ml(v.a, 2.0 + v.b - v.a, std::pow(T / v.eps, v.a));
}

double tv_difference(const KernelSpec& k, double T) {
  if (limit_is_zero(k)) return total_variation(k, T);
  const MlView v = ml_view(k);
  if (v.a == v.b) return total_variation(k, T) + 1.0;
  // K_eps - K_0 = -tau^{a-b} t^{b-a-1} E_{a,b-a}(-(t/eps)^a)
  return abs_ml_integral(v.a, v.b - v.a, v.eps, v.tau_factor, T);
}

}  // namespace wv::kernels
