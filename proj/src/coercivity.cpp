#include "wv/coercivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/cos_pi.hpp>

#include "wv/mlf.hpp"

namespace wv::coercivity {
namespace {

using kernels::Family;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double cos_half_pi(double x) { return boost::math::cos_pi(0.5 * x); }

// (a, b, 1/P) for the kernels the Fourier criterion covers.
struct FourierView {
  double a, b, inv_prefactor, eps;
};

FourierView fourier_view(const KernelSpec& k) {
  if (k.family == Family::exponential) return {1.0, 1.0, 1.0, *k.eps};
  if (k.family == Family::mittag_leffler && *k.b <= *k.a) return {*k.a, *k.b, 1.0 / k.prefactor(), *k.eps};
  throw UnsupportedOperation("Fourier criterion needs an ML kernel with b <= a or the exponential kernel, got " +
                             k.describe());
}

// Re((i nu)^b + (i nu)^{b-a})
double g_fourier(double a, double b, double nu) {
  return cos_half_pi(b) * std::pow(nu, b) + cos_half_pi(b - a) * std::pow(nu, b - a);
}

double golden_min(const std::function<double(double)>& f, double lo, double hi, double* fmin) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 200 && (hi - lo) > 1e-14 * std::abs(hi); ++i) {
    if (f1 < f2) {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - r * (hi - lo); f1 = f(x1);
    } else {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + r * (hi - lo); f2 = f(x2);
    }
  }
  const double x = 0.5 * (lo + hi);
  *fmin = f(x);
  return x;
}

struct Tables {
  std::vector<double> E;                  // lhs lag weights
  std::vector<std::vector<double>> D;     // D[l][q]
  std::vector<double> u, wq;              // Gauss points on [0,1] in the u variable
  std::vector<double> Fnode;              // F(l h), l = 0..N
};

Tables make_tables(const KernelSpec& k, int N, double h) {
  Tables tb;
  const auto& ax = boost::math::quadrature::gauss<double, 8>::abscissa();
  const auto& wt = boost::math::quadrature::gauss<double, 8>::weights();
  for (std::size_t i = 0; i < ax.size(); ++i) {
    for (double s : {-1.0, 1.0}) {
      tb.u.push_back(0.5 * (1.0 + s * ax[i]));
      tb.wq.push_back(0.5 * wt[i]);
    }
  }
  std::vector<double> G(N + 2);
  for (int l = 0; l <= N + 1; ++l) G[l] = kernels::running_integral(k, l * h, 2);
  tb.E.resize(N);
  tb.E[0] = G[1];
  for (int l = 1; l < N; ++l) tb.E[l] = (G[l + 1] - G[l]) - (G[l] - G[l - 1]);
  const std::size_t Q = tb.u.size();
  std::vector<std::vector<double>> Fq(N, std::vector<double>(Q));
  for (int l = 0; l < N; ++l)
    for (std::size_t q = 0; q < Q; ++q) Fq[l][q] = kernels::conv_one(k, (l + tb.u[q] * tb.u[q]) * h);
  tb.D.assign(N, std::vector<double>(Q));
  for (int l = 0; l < N; ++l)
    for (std::size_t q = 0; q < Q; ++q) tb.D[l][q] = Fq[l][q] - (l > 0 ? Fq[l - 1][q] : 0.0);
  tb.Fnode.resize(N + 1);
  for (int l = 0; l <= N; ++l) tb.Fnode[l] = kernels::conv_one(k, l * h);
  if (k.family == Family::dirac) tb.Fnode[0] = 0.0;
  return tb;
}

QuadraticSides sides_from_tables(const Tables& tb, const std::vector<double>& y, double h) {
  const int N = static_cast<int>(y.size());
  const std::size_t Q = tb.u.size();
  QuadraticSides out;
  out.lhs.resize(N);
  out.rhs.resize(N);
  out.w.resize(N);
  double lhs = 0.0, rhs = 0.0;
  for (int i = 0; i < N; ++i) {
    double cell_lhs = 0.0;
    for (int l = 0; l <= i; ++l) cell_lhs += tb.E[l] * y[i - l];
    lhs += y[i] * cell_lhs;
    double cell_rhs = 0.0;
    for (std::size_t q = 0; q < Q; ++q) {
      double w = 0.0;
      for (int l = 0; l <= i; ++l) w += tb.D[l][q] * y[i - l];
      cell_rhs += tb.wq[q] * 2.0 * h * tb.u[q] * w * w;
    }
    rhs += cell_rhs;
    double wn = 0.0;
    for (int j = 0; j <= i; ++j) wn += y[j] * (tb.Fnode[i + 1 - j] - tb.Fnode[i - j]);
    out.lhs[i] = lhs;
    out.rhs[i] = rhs;
    out.w[i] = wn;
  }
  return out;
}

struct Signal {
  bool smooth = true;
  double c0 = 0.0;
  std::vector<double> ca, cb;          // trigonometric coefficients
  std::vector<double> jumps, levels;   // step signal
  double T = 1.0;

  double operator()(double s) const {
    if (smooth) {
      double v = c0;
      for (std::size_t k = 0; k < ca.size(); ++k) {
        const double arg = kTwoPi * (k + 1) * s / T;
        v += ca[k] * std::cos(arg) + cb[k] * std::sin(arg);
      }
      return v;
    }
    std::size_t piece = 0;
    while (piece < jumps.size() && s >= jumps[piece]) ++piece;
    return levels[piece];
  }
};

// Step signals jump on coarse nodes so that both grids resolve them exactly.
Signal draw_signal(bool smooth, double T, int n_cells, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Signal s;
  s.smooth = smooth;
  s.T = T;
  if (smooth) {
    s.c0 = normal(rng);
    for (int k = 0; k < 16; ++k) {
      s.ca.push_back(normal(rng));
      s.cb.push_back(normal(rng));
    }
  } else {
    std::uniform_int_distribution<int> count(1, 5);
    std::uniform_int_distribution<int> node(1, std::max(1, n_cells - 1));
    const int n = count(rng);
    for (int i = 0; i < n; ++i) s.jumps.push_back(T * node(rng) / n_cells);
    std::sort(s.jumps.begin(), s.jumps.end());
    for (int i = 0; i <= n; ++i) s.levels.push_back(normal(rng));
  }
  return s;
}

std::vector<double> sample(const Signal& s, int N, double h) {
  std::vector<double> y(N);
  for (int i = 0; i < N; ++i) y[i] = s((i + 0.5) * h);
  return y;
}

std::vector<double> ratios(const QuadraticSides& q) {
  const double floor = 1e-12 * q.rhs.back();
  std::vector<double> r(q.lhs.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t m = 0; m < q.lhs.size(); ++m)
    if (q.rhs[m] > floor) r[m] = q.lhs[m] / q.rhs[m];
  return r;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::fourier: return "fourier";
    case Method::resolvent: return "resolvent";
    case Method::quadratic_form: return "quadratic_form";
  }
  return "?";
}

double fourier_constant(double a, double b, double tau_theta, double eps) {
  if (!(b > 0.0 && b <= a && a <= 1.0))
    throw DomainError("Fourier constant needs 0 < b <= a <= 1 (got a=" + std::to_string(a) + ", b=" + std::to_string(b) + ")");
  if (!(tau_theta > 0.0 && eps > 0.0)) throw DomainError("tau_theta and eps must be positive");
  if (a == b) return kTwoPi;
  // stationary point of cos(b pi/2) w^b + cos((b-a) pi/2) w^{b-a}: w^a = R
  const double R = (a - b) * cos_half_pi(b - a) / (b * cos_half_pi(b));
  const double inf_g = std::pow(R, (b - a) / a) * cos_half_pi(b - a) * (a / b);
  return kTwoPi * std::pow(tau_theta / eps, b - a) * inf_g;
}

double re_m(const KernelSpec& k, double omega) {
  const FourierView v = fourier_view(k);
  return kTwoPi * v.inv_prefactor * g_fourier(v.a, v.b, v.eps * omega);
}

Infimum re_m_infimum(const KernelSpec& k, double lo, double hi) {
  if (!(lo > 0.0 && hi > lo)) throw DomainError("omega range must satisfy 0 < lo < hi");
  const FourierView v = fourier_view(k);
  auto f = [&](double w) { return re_m(k, w); };
  const int n = 4096;
  for (int extension = 0;; ++extension) {
    const double llo = std::log(lo), lhi = std::log(hi);
    int best = 0;
    double fbest = std::numeric_limits<double>::infinity();
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i) {
      grid[i] = std::exp(llo + (lhi - llo) * i / (n - 1));
      const double fv = f(grid[i]);
      if (fv < fbest) { fbest = fv; best = i; }
    }
    if (best == 0 && extension < 12 && v.a == v.b) {
      // infimum approached as w -> 0 only; push the window down
      hi = grid[1];
      lo = lo * 1e-6;
      continue;
    }
    const double a = grid[std::max(best - 1, 0)], b = grid[std::min(best + 1, n - 1)];
    double fmin = 0.0;
    const double x = golden_min(f, a, b, &fmin);
    if (fmin < fbest) return {x, fmin};
    return {grid[best], fbest};
  }
}

double Resolvent::tail_at(double t) const {
  double s = 0.0;
  for (const auto& p : tail) s += p.coef * std::pow(t, p.order - 1.0) * mlf::rgamma(p.order);
  return s;
}

Resolvent resolvent_of(const KernelSpec& k) {
  Resolvent r;
  switch (k.family) {
    case Family::abel: {
      const double al = *k.alpha, e = *k.eps, tau = *k.tau_theta;
      if (al == 1.0) {
        // constant kernel e/tau: K * (tau/e) delta_0 = 1
        r.point_mass = tau / e;
        r.boundary_case = true;
      } else {
        r.tail.push_back({std::pow(tau, al) / e, 1.0 - al});
      }
      return r;
    }
    case Family::limit_abel: {
      const double al = *k.alpha, tau = *k.tau_theta;
      if (al == 1.0) {
        r.point_mass = tau;
        r.boundary_case = true;
      } else {
        r.tail.push_back({std::pow(tau, al), 1.0 - al});
      }
      return r;
    }
    case Family::dirac:
      r.tail.push_back({1.0 / *k.eps, 1.0});
      return r;
    case Family::exponential:
    case Family::mittag_leffler: {
      const double a = k.family == Family::exponential ? 1.0 : *k.a;
      const double b = k.family == Family::exponential ? 1.0 : *k.b;
      if (b < a) throw UnsupportedOperation("no explicit resolvent for ML kernels with b < a");
      const double e = *k.eps;
      // Laplace: 1/(s K^(s)) = (P e^{a-b})^{-1} (s^{b-a-1} + e^a s^{b-1})
      const double c = 1.0 / (k.prefactor() * std::pow(e, a - b));
      r.tail.push_back({c, 1.0 + a - b});
      if (b == 1.0) r.point_mass = c * std::pow(e, a);
      else r.tail.push_back({c * std::pow(e, a), 1.0 - b});
      return r;
    }
    case Family::zero: break;
  }
  throw UnsupportedOperation("kernel '" + k.describe() + "' has no resolvent of the first kind");
}

double conv_with_power(const KernelSpec& k, double coef, double beta, double t) {
  if (!(t > 0.0)) return 0.0;
  auto g = [](double order, double s) { return std::pow(s, order - 1.0) * mlf::rgamma(order); };
  switch (k.family) {
    case Family::zero: return 0.0;
    case Family::dirac: return coef * *k.eps * g(beta, t);
    case Family::abel: return coef * *k.eps * std::pow(*k.tau_theta, -*k.alpha) * g(*k.alpha + beta, t);
    case Family::limit_abel: return coef * std::pow(*k.tau_theta, -*k.alpha) * g(*k.alpha + beta, t);
    case Family::exponential:
    case Family::mittag_leffler: {
      const double a = k.family == Family::exponential ? 1.0 : *k.a;
      const double b = k.family == Family::exponential ? 1.0 : *k.b;
      const double e = *k.eps;
      // g_beta * (t^{b-1} E_{a,b}(-l t^a)) = t^{b+beta-1} E_{a,b+beta}(-l t^a)
      return coef * k.prefactor() * std::pow(e, -b) * std::pow(t, b + beta - 1.0) *
             mlf::ml(a, b + beta, std::pow(t / e, a));
    }
  }
  return 0.0;
}

double verify_resolvent(const KernelSpec& k, const Resolvent& res, double T, int n_points) {
  if (!(T > 0.0) || n_points < 1) throw DomainError("verify_resolvent needs T > 0 and n_points >= 1");
  double worst = 0.0;
  for (int i = 1; i <= n_points; ++i) {
    const double t = T * i / n_points;
    double v = 0.0;
    if (res.point_mass != 0.0) v += res.point_mass * kernels::eval(k, t);
    for (const auto& p : res.tail) v += conv_with_power(k, p.coef, p.order, t);
    worst = std::max(worst, std::abs(v - 1.0));
  }
  return worst;
}

double reference_constant(const KernelSpec& k, double T, Method* method) {
  auto set = [&](Method m) {
    if (method) *method = m;
  };
  switch (k.family) {
    case Family::zero: set(Method::quadratic_form); return 0.0;
    case Family::exponential: set(Method::fourier); return 1.0;
    case Family::mittag_leffler:
      if (*k.b <= *k.a) {
        set(Method::fourier);
        const double ratio = k.fixed_ratio ? *k.rho : *k.tau_theta / *k.eps;
        return fourier_constant(*k.a, *k.b, ratio, 1.0) / kTwoPi;
      }
      [[fallthrough]];
    default: {
      set(Method::resolvent);
      return resolvent_of(k).tail_at(T);
    }
  }
}

QuadraticSides quadratic_form_sides(const KernelSpec& k, const std::vector<double>& y, double h) {
  if (y.empty() || !(h > 0.0)) throw DomainError("quadratic form needs a nonempty signal and h > 0");
  return sides_from_tables(make_tables(k, static_cast<int>(y.size()), h), y, h);
}

QuadraticFormResult quadratic_form_test(const KernelSpec& k, double T, int n_samples, double dt,
                                        std::uint64_t seed) {
  if (!(dt > 0.0) || n_samples < 1 || !(T > 0.0)) throw DomainError("quadratic_form_test needs dt > 0, T > 0, n_samples >= 1");
  if (k.family == Family::zero) throw UnsupportedOperation("zero kernel: K*y vanishes identically");
  const int N = std::max(1, static_cast<int>(std::lround(T / dt)));
  const double h = T / N;
  const Tables coarse = make_tables(k, N, h);
  const Tables fine = make_tables(k, 2 * N, h / 2);
  QuadraticFormResult out;
  out.c_reference = reference_constant(k, T, &out.method);
  out.n_signals = n_samples;
  out.min_ratio = out.min_ratio_coarse = out.min_ratio_fine = std::numeric_limits<double>::infinity();
  const int n_steps = n_samples / 5;
  for (int s = 0; s < n_samples; ++s) {
    const Signal sig = draw_signal(s < n_samples - n_steps, T, N, seed + static_cast<std::uint64_t>(s));
    const QuadraticSides qc = sides_from_tables(coarse, sample(sig, N, h), h);
    const QuadraticSides qf = sides_from_tables(fine, sample(sig, 2 * N, h / 2), h / 2);
    if (!(qc.rhs.back() > 0.0) || !(qf.rhs.back() > 0.0)) throw DomainError("degenerate signal: K*y vanishes");
    const auto rc = ratios(qc), rf = ratios(qf);
    double mc = std::numeric_limits<double>::infinity(), mf = mc;
    for (int m = 0; m < N; ++m) {
      // coarse node (m+1) h is fine node 2(m+1)
      const double c = rc[m], f = rf[2 * m + 1];
      if (std::isnan(c) || std::isnan(f)) continue;
      mc = std::min(mc, c);
      mf = std::min(mf, f);
    }
    // first-order in dt: extrapolate the per-signal minimum
    const double best = 2.0 * mf - mc;
    out.min_ratio_coarse = std::min(out.min_ratio_coarse, mc);
    out.min_ratio_fine = std::min(out.min_ratio_fine, mf);
    out.per_signal.push_back(best);
    out.min_ratio = std::min(out.min_ratio, best);
  }
  return out;
}

CoercivityReport a1_report(const KernelSpec& family, const std::vector<double>& eps_grid, double T) {
  if (eps_grid.empty()) throw DomainError("eps grid must be nonempty");
  for (std::size_t i = 1; i < eps_grid.size(); ++i)
    if (!(eps_grid[i] < eps_grid[i - 1])) throw DomainError("eps grid must be strictly decreasing");
  CoercivityReport r;
  r.eps_grid = eps_grid;
  const bool blows_up = family.family == Family::mittag_leffler && *family.a > *family.b && !family.fixed_ratio;
  r.c_frakK = std::numeric_limits<double>::infinity();
  for (double e : eps_grid) {
    const KernelSpec k = family.depends_on_eps() ? family.with_eps(e) : family;
    r.a1_values.push_back(kernels::total_variation(k, T));
    double c = 0.0;
    Method m = Method::quadratic_form;
    try {
      c = reference_constant(k, T, &m);
    } catch (const UnsupportedOperation&) {
      c = 0.0;
    }
    r.c_values.push_back(c);
    r.c_frakK = std::min(r.c_frakK, c);
    r.method = m;
  }
  r.a1_bound = *std::max_element(r.a1_values.begin(), r.a1_values.end());
  r.a1_uniform = !blows_up && std::isfinite(r.a1_bound);
  r.details["T"] = T;
  r.details["a1_first"] = r.a1_values.front();
  r.details["a1_last"] = r.a1_values.back();
  if (family.family == Family::mittag_leffler) {
    const double a = *family.a, b = *family.b;
    if (b >= a && !family.fixed_ratio) {
      // eps -> 0 limit of the total variation: (T/tau)^{b-a} / Gamma(b+1-a)
      r.details["a1_limit"] = std::pow(T / *family.tau_theta, b - a) * mlf::rgamma(b + 1.0 - a);
    }
  }
  if (blows_up) r.note = "total variation grows without bound as eps -> 0 (a > b without fixed ratio)";
  else if (r.c_frakK <= 0.0) r.note = "no positive coercivity constant available";
  return r;
}

}  // namespace wv::coercivity
