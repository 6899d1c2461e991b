#include "wv/solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "wv/quadrature.hpp"

namespace wv::solver {
namespace {

constexpr double kPi = std::numbers::pi;

struct Extremes {
  double lo = 0.0, hi = 0.0;
};

// Refine a local extremum of sign * u inside [a, b] by golden section.
double refine(const SpectralBasis& b, const VectorXd& modes, double a, double c, double sign) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double x) { return -sign * b.eval(modes, x); };
  double x1 = c - r * (c - a), x2 = a + r * (c - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 60; ++i) {
    if (f1 < f2) {
      c = x2; x2 = x1; f2 = f1;
      x1 = c - r * (c - a); f1 = f(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + r * (c - a); f2 = f(x2);
    }
  }
  return sign * b.eval(modes, 0.5 * (a + c));
}

class ExtremeFinder {
 public:
  explicit ExtremeFinder(const SpectralBasis& b) : b_(b) {
    const int q = 8 * b.n_modes + 1;
    h_ = b.L / (q + 1);
    table_.resize(q, b.n_modes);
    for (int j = 1; j <= q; ++j)
      for (int i = 1; i <= b.n_modes; ++i) table_(j - 1, i - 1) = std::sin(kPi * i * j / (q + 1.0));
  }

  Extremes operator()(const VectorXd& modes) const {
    const VectorXd v = table_ * modes;
    Extremes e;
    e.lo = std::min(0.0, -refined(v, modes, -1.0));
    e.hi = std::max(0.0, refined(v, modes, 1.0));
    return e;
  }

 private:
  // largest of sign * u, refining the three best grid maxima
  double refined(const VectorXd& v, const VectorXd& modes, double sign) const {
    const int q = static_cast<int>(v.size());
    std::vector<std::pair<double, int>> peaks;
    for (int j = 0; j < q; ++j) {
      const double s = sign * v(j);
      const double left = j > 0 ? sign * v(j - 1) : 0.0, right = j + 1 < q ? sign * v(j + 1) : 0.0;
      if (s >= left && s >= right) peaks.push_back({s, j});
    }
    std::sort(peaks.rbegin(), peaks.rend());
    double best = peaks.empty() ? 0.0 : peaks.front().first;
    for (std::size_t p = 0; p < std::min<std::size_t>(3, peaks.size()); ++p) {
      const double x = (peaks[p].second + 1) * h_;
      best = std::max(best, refine(b_, modes, std::max(0.0, x - h_), std::min(b_.L, x + h_), sign));
    }
    return best;
  }

  const SpectralBasis& b_;
  double h_ = 0.0;
  Eigen::MatrixXd table_;
};

Extremes trajectory_extremes(const Trajectory& traj, const SpectralBasis& basis) {
  const ExtremeFinder find(basis);
  Extremes out;
  for (const auto& xi : traj.xi) {
    const Extremes e = find(xi);
    out.lo = std::min(out.lo, e.lo);
    out.hi = std::max(out.hi, e.hi);
  }
  return out;
}

// (sin(pi x / L)^2, v_i)
double square_projection(int i, double L) {
  if (i % 2 == 0) return 0.0;
  return L * (-4.0 / (kPi * i * (double(i) * i - 4.0)));
}

// (K * sin)(t) = G1(t) - int_0^t G2(s) cos(t - s) ds, G_n = K * g_{n+1}
double kernel_conv_sin(const kernels::KernelSpec& k, double t) {
  if (k.family == kernels::Family::zero || t == 0.0) return 0.0;
  const double tail = quad::integrate(
      [&](double s) { return kernels::running_integral(k, s, 3) * std::cos(t - s); }, 0.0, t, 1e-13, 1e-13);
  return kernels::running_integral(k, t, 2) - tail;
}

ProblemData manufactured(const PDEConfig& cfg, const SpectralBasis& basis) {
  const int n = basis.n_modes;
  const double A = cfg.data.amplitude, L = cfg.L, c2 = cfg.c * cfg.c, k = cfg.k;
  const double lam = basis.eigenvalues[0];
  ProblemData d;
  d.u0 = VectorXd::Zero(n);
  d.u0(0) = A;
  d.u1 = VectorXd::Zero(n);
  VectorXd sq(n);
  for (int i = 0; i < n; ++i) sq(i) = square_projection(i + 1, L);
  auto cache = std::make_shared<std::pair<std::mutex, std::map<double, double>>>();
  const kernels::KernelSpec kernel = cfg.kernel;
  d.forcing = [=](double t) {
    double ks;
    {
      std::lock_guard<std::mutex> lock(cache->first);
      auto it = cache->second.find(t);
      if (it == cache->second.end()) it = cache->second.emplace(t, kernel_conv_sin(kernel, t)).first;
      ks = it->second;
    }
    // f = A s [(c^2 lam - 1) cos t - lam (K*sin)(t)] - 2 k A^2 s^2 cos 2t
    VectorXd f = (-2.0 * k * A * A * std::cos(2.0 * t)) * sq;
    f(0) += A * (c2 * lam - 1.0) * std::cos(t) * (L / 2.0) - A * lam * ks * (L / 2.0);
    return f;
  };
  d.exact = [n, A](double t) {
    VectorXd xi = VectorXd::Zero(n), xi_t = VectorXd::Zero(n);
    xi(0) = A * std::cos(t);
    xi_t(0) = -A * std::sin(t);
    return std::make_pair(xi, xi_t);
  };
  return d;
}

void check_ball(const PDEConfig& cfg, const Extremes& e, int iterate) {
  const double linf = std::max(-e.lo, e.hi);
  if (4.0 * std::abs(cfg.k) * linf > 1.0) {
    const double margin = 1.0 + 2.0 * cfg.k * (cfg.k > 0 ? e.lo : e.hi);
    throw BallViolation("iterate " + std::to_string(iterate) + " leaves the ball: 4|k| |u|_inf = " +
                            std::to_string(4.0 * std::abs(cfg.k) * linf),
                        iterate, margin);
  }
}

}  // namespace

std::string_view to_string(Preset p) {
  switch (p) {
    case Preset::zero: return "zero";
    case Preset::single_mode: return "single-mode";
    case Preset::small_gauss_modes: return "small-gauss-modes";
    case Preset::manufactured: return "manufactured";
  }
  return "?";
}

Preset parse_preset(std::string_view s) {
  for (Preset p : {Preset::zero, Preset::single_mode, Preset::small_gauss_modes, Preset::manufactured})
    if (s == to_string(p)) return p;
  throw DomainError("unknown data preset '" + std::string(s) + "'");
}

void PDEConfig::validate() const {
  if (!(c > 0.0)) throw DomainError("c must be positive");
  if (!(T > 0.0) || !(dt > 0.0)) throw DomainError("T and dt must be positive");
  if (!(L > 0.0)) throw DomainError("L must be positive");
  if (n_modes < 1) throw DomainError("n_modes must be at least 1");
  if (!(fp_tol > 0.0)) throw DomainError("fp_tol must be positive");
  if (fp_max_iters < 1) throw DomainError("fp_max_iters must be at least 1");
  if (!(relaxation > 0.0 && relaxation <= 1.0)) throw DomainError("relaxation must lie in (0, 1]");
  if (!std::isfinite(k)) throw DomainError("k must be finite");
  if (data.mode < 1 || data.mode > n_modes) throw DomainError("data mode outside the basis");
  if (!(data.width > 0.0)) throw DomainError("data width must be positive");
  kernels::validate(kernel);
}

ProblemData make_data(const PDEConfig& cfg, const SpectralBasis& basis) {
  const int n = basis.n_modes;
  ProblemData d;
  d.u0 = VectorXd::Zero(n);
  d.u1 = VectorXd::Zero(n);
  switch (cfg.data.preset) {
    case Preset::zero: break;
    case Preset::single_mode: d.u0(cfg.data.mode - 1) = cfg.data.amplitude; break;
    case Preset::small_gauss_modes: {
      const SpectralBasis fine = SpectralBasis::make(cfg.L, n, 4095);
      VectorXd values(fine.quad_points.size());
      for (std::size_t j = 0; j < fine.quad_points.size(); ++j) {
        const double z = (fine.quad_points[j] / cfg.L - cfg.data.center) / cfg.data.width;
        values(j) = cfg.data.amplitude * std::exp(-z * z);
      }
      d.u0 = fine.from_grid(values);
      break;
    }
    case Preset::manufactured: return manufactured(cfg, basis);
  }
  return d;
}

double linf_state(const VectorXd& modes, const SpectralBasis& basis) {
  const Extremes e = ExtremeFinder(basis)(modes);
  return std::max(-e.lo, e.hi);
}

double linf_estimate(const Trajectory& traj, const SpectralBasis& basis) {
  const Extremes e = trajectory_extremes(traj, basis);
  return std::max(-e.lo, e.hi);
}

SolveResult solve(const PDEConfig& cfg) {
  cfg.validate();
  return solve(cfg, make_data(cfg, SpectralBasis::make(cfg.L, cfg.n_modes)));
}

SolveResult solve(const PDEConfig& cfg, const ProblemData& data) {
  cfg.validate();
  const SpectralBasis basis = SpectralBasis::make(cfg.L, cfg.n_modes);
  SolveResult out;
  auto finish = [&](const Extremes& e) {
    out.linf = std::max(-e.lo, e.hi);
    out.ball_margin = 1.0 + 2.0 * cfg.k * (cfg.k > 0 ? e.lo : e.hi);
    out.ball_ok = 4.0 * std::abs(cfg.k) * out.linf <= 1.0;
  };
  // phi^(0): the linear problem with k = 0
  out.traj = volterra::march(volterra::assemble(basis, {}, cfg.kernel, data.forcing, 0.0, cfg.c), data.u0, data.u1,
                             cfg.T, cfg.dt);
  out.iterations = 1;
  Extremes ext = trajectory_extremes(out.traj, basis);
  if (cfg.k == 0.0) {
    out.converged = true;
    finish(ext);
    return out;
  }
  check_ball(cfg, ext, 0);
  for (int j = 1; j <= cfg.fp_max_iters; ++j) {
    const auto sys = volterra::assemble(basis, volterra::field_from(out.traj), cfg.kernel, data.forcing, cfg.k, cfg.c);
    Trajectory next = volterra::march(sys, data.u0, data.u1, cfg.T, cfg.dt);
    if (cfg.relaxation != 1.0) {
      const double w = cfg.relaxation;
      for (std::size_t m = 0; m < next.t.size(); ++m) {
        next.xi[m] = w * next.xi[m] + (1.0 - w) * out.traj.xi[m];
        next.xi_t[m] = w * next.xi_t[m] + (1.0 - w) * out.traj.xi_t[m];
        next.mu[m] = w * next.mu[m] + (1.0 - w) * out.traj.mu[m];
      }
    }
    const double res = volterra::energy_distance(next, out.traj, basis);
    out.fp_residuals.push_back(res);
    out.traj = std::move(next);
    out.iterations = j + 1;
    ext = trajectory_extremes(out.traj, basis);
    check_ball(cfg, ext, j);
    if (res <= cfg.fp_tol) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged)
    throw NonConvergence("fixed point did not reach " + std::to_string(cfg.fp_tol) + " in " +
                             std::to_string(cfg.fp_max_iters) + " iterations",
                         out.fp_residuals);
  finish(ext);
  return out;
}

double sobolev_sq(const VectorXd& modes, const SpectralBasis& basis, int s) {
  double sum = 0.0;
  for (int i = 0; i < basis.n_modes; ++i) {
    double w = 1.0, p = 1.0;
    for (int r = 1; r <= s; ++r) {
      p *= basis.eigenvalues[i];
      w += p;
    }
    sum += w * modes(i) * modes(i);
  }
  return 0.5 * basis.L * sum;
}

SmallnessReport check_smallness(const PDEConfig& cfg) {
  cfg.validate();
  const SpectralBasis basis = SpectralBasis::make(cfg.L, cfg.n_modes);
  const ProblemData d = make_data(cfg, basis);
  SmallnessReport r;
  r.h1_u0_sq = sobolev_sq(d.u0, basis, 1);
  r.l2_u1_sq = sobolev_sq(d.u1, basis, 0);
  r.h3_u0_sq = sobolev_sq(d.u0, basis, 3);
  r.h2_u1_sq = sobolev_sq(d.u1, basis, 2);
  if (d.forcing) {
    // forcing returns projections (f, v_i); coefficients are those over L/2
    auto coeffs = [&](double t) -> VectorXd { return d.forcing(t) / (0.5 * cfg.L); };
    const int panels = 256;
    const double h = cfg.T / panels;
    double l1 = 0.0, h1h1 = 0.0;
    std::vector<VectorXd> f(panels + 1);
    for (int j = 0; j <= panels; ++j) f[j] = coeffs(j * h);
    for (int j = 0; j <= panels; ++j) {
      // Simpson weights
      const double w = (j == 0 || j == panels) ? 1.0 : (j % 2 ? 4.0 : 2.0);
      const VectorXd ft = j == 0 ? VectorXd((f[1] - f[0]) / h)
                          : j == panels ? VectorXd((f[panels] - f[panels - 1]) / h)
                                        : VectorXd((f[j + 1] - f[j - 1]) / (2.0 * h));
      l1 += w * std::sqrt(sobolev_sq(f[j], basis, 0));
      h1h1 += w * (sobolev_sq(f[j], basis, 1) + sobolev_sq(ft, basis, 1));
    }
    r.l1_l2_f_sq = std::pow(l1 * h / 3.0, 2);
    r.h1_h1_f_sq = h1h1 * h / 3.0;
  }
  r.r0_sq = r.h1_u0_sq + r.l2_u1_sq + r.l1_l2_f_sq;
  r.r_sq = r.h3_u0_sq + r.h2_u1_sq + r.h1_h1_f_sq;
  return r;
}

}  // namespace wv::solver
