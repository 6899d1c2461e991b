#include "wv/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace wv::volterra {
namespace {

constexpr double kPi = std::numbers::pi;

// Cosine moments C_q = int_0^L w cos(q pi x / L) dx of w = base + sum_l s_l v_l.
VectorXd cosine_moments(const SpectralBasis& b, double base, const VectorXd& s) {
  VectorXd C = b.sin_cos.transpose() * s;
  C(0) += base * b.L;
  return C;
}

// (w v_i, v_j) = (1/2)(C_{|i-j|} - C_{i+j}) from sin sin = (cos(i-j) - cos(i+j)) / 2
MatrixXd moment_matrix(const SpectralBasis& b, const VectorXd& C) {
  const int n = b.n_modes;
  MatrixXd M(n, n);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) M(i - 1, j - 1) = 0.5 * (C(std::abs(i - j)) - C(i + j));
  return M;
}

void check_modes(const SpectralBasis& b, const VectorXd& v, const char* what) {
  if (v.size() != b.n_modes)
    throw DomainError(std::string(what) + " has " + std::to_string(v.size()) + " modes, basis has " +
                      std::to_string(b.n_modes));
  if (!v.allFinite()) throw DomainError(std::string(what) + " is not finite");
}

int node_count(double T, double dt) {
  if (!(T > 0.0) || !(dt > 0.0)) throw DomainError("T and dt must be positive");
  const double r = T / dt;
  const long n = std::lround(r);
  if (n < 1 || std::abs(r - n) > 1e-9 * std::max(1.0, r)) throw DomainError("dt must divide T");
  return static_cast<int>(n);
}

}  // namespace

SpectralBasis SpectralBasis::make(double L, int n_modes, int n_points) {
  if (!(L > 0.0)) throw DomainError("domain length must be positive");
  if (n_modes < 1) throw DomainError("need at least one mode");
  const int q_min = (3 * n_modes + 1) / 2;
  if (n_points == 0) n_points = q_min;
  if (n_points < q_min) throw DomainError("collocation grid must have at least 3n/2 points");
  SpectralBasis b;
  b.L = L;
  b.n_modes = n_modes;
  for (int i = 1; i <= n_modes; ++i) b.eigenvalues.push_back((i * kPi / L) * (i * kPi / L));
  b.sines.resize(n_points, n_modes);
  for (int j = 1; j <= n_points; ++j) {
    b.quad_points.push_back(j * L / (n_points + 1));
    for (int i = 1; i <= n_modes; ++i) b.sines(j - 1, i - 1) = std::sin(kPi * i * j / (n_points + 1.0));
  }
  b.sin_cos = MatrixXd::Zero(n_modes, 2 * n_modes + 1);
  for (int l = 1; l <= n_modes; ++l)
    for (int q = 0; q <= 2 * n_modes; ++q)
      if ((l + q) % 2 == 1) b.sin_cos(l - 1, q) = (L / kPi) * 2.0 * l / double(l * l - q * q);
  return b;
}

VectorXd SpectralBasis::to_grid(const VectorXd& modes) const { return sines * modes; }

VectorXd SpectralBasis::from_grid(const VectorXd& values) const {
  const double Q = static_cast<double>(quad_points.size());
  return (2.0 / (Q + 1.0)) * (sines.transpose() * values);
}

double SpectralBasis::eval(const VectorXd& modes, double x) const {
  double s = 0.0;
  for (int i = 0; i < n_modes; ++i) s += modes(i) * std::sin((i + 1) * kPi * x / L);
  return s;
}

CoefficientField field_from(const Trajectory& traj) {
  if (traj.t.empty()) throw DomainError("empty trajectory");
  auto lookup = [t = traj.t, dt = traj.dt](const std::vector<VectorXd>& v) {
    return [t, dt, v](double s) -> VectorXd {
      const double r = s / dt;
      const long j = std::lround(r);
      if (j >= 0 && j < static_cast<long>(v.size()) && std::abs(r - j) < 1e-9) return v[j];
      // between nodes: linear interpolation
      const long lo = std::clamp<long>(static_cast<long>(std::floor(r)), 0, static_cast<long>(v.size()) - 2);
      const double w = std::clamp(r - lo, 0.0, 1.0);
      return (1.0 - w) * v[lo] + w * v[lo + 1];
    };
  };
  CoefficientField f;
  f.phi = lookup(traj.xi);
  f.phi_t = lookup(traj.xi_t);
  f.sample_times = traj.t;
  return f;
}

MatrixXd SemiDiscreteSystem::mass_m(double t) const {
  if (trivial_mass()) return MatrixXd::Identity(basis.n_modes, basis.n_modes) * (basis.L / 2.0);
  return moment_matrix(basis, cosine_moments(basis, 1.0, 2.0 * k * field->phi(t)));
}

MatrixXd SemiDiscreteSystem::mass_mt(double t) const {
  if (trivial_mass()) return MatrixXd::Zero(basis.n_modes, basis.n_modes);
  return moment_matrix(basis, cosine_moments(basis, 0.0, 2.0 * k * field->phi_t(t)));
}

VectorXd SemiDiscreteSystem::stiffness() const {
  VectorXd d(basis.n_modes);
  for (int i = 0; i < basis.n_modes; ++i) d(i) = 0.5 * basis.L * basis.eigenvalues[i];
  return d;
}

VectorXd SemiDiscreteSystem::force(double t) const {
  if (!forcing) return VectorXd::Zero(basis.n_modes);
  VectorXd f = forcing(t);
  check_modes(basis, f, "forcing");
  return f;
}

double SemiDiscreteSystem::coefficient_min(double t) const {
  if (trivial_mass()) return 1.0;
  return 1.0 + (2.0 * k * basis.to_grid(field->phi(t))).minCoeff();
}

SemiDiscreteSystem assemble(const SpectralBasis& basis, std::optional<CoefficientField> field,
                            const kernels::KernelSpec& kernel, Forcing f, double k, double c) {
  if (!(c > 0.0)) throw DomainError("sound speed must be positive");
  kernels::validate(kernel);
  if (field && (!field->phi || !field->phi_t)) throw DomainError("coefficient field needs phi and phi_t");
  SemiDiscreteSystem sys{basis, kernel, c, k, std::move(field), std::move(f)};
  if (!sys.trivial_mass()) {
    double margin = std::numeric_limits<double>::infinity();
    for (double t : sys.field->sample_times) margin = std::min(margin, sys.coefficient_min(t));
    if (!sys.field->sample_times.empty()) sys.margin = margin;
    if (sys.margin <= kMassFloor)
      throw DegeneracyError("1 + 2k phi drops to " + std::to_string(sys.margin) + " (floor 0.5)", sys.margin);
  }
  return sys;
}

Trajectory march(const SemiDiscreteSystem& sys, const VectorXd& xi0, const VectorXd& xi1, double T, double dt) {
  const auto& B = sys.basis;
  check_modes(B, xi0, "xi0");
  check_modes(B, xi1, "xi1");
  const int N = node_count(T, dt);
  const double h = T / N;
  const int n = B.n_modes;
  const double c2 = sys.c * sys.c;
  const VectorXd D = sys.stiffness();

  // kernel moments: F = K*1, G1 = K*1*1, G2 = K*1*1*1 on the lag grid
  std::vector<double> F(N + 1), G1(N + 1), G2(N + 1);
  const bool no_kernel = sys.kernel.family == kernels::Family::zero;
  for (int l = 0; l <= N; ++l) {
    if (no_kernel) break;
    F[l] = kernels::running_integral(sys.kernel, l * h, 1);
    G1[l] = kernels::running_integral(sys.kernel, l * h, 2);
    G2[l] = kernels::running_integral(sys.kernel, l * h, 3);
  }
  // (K*1)(0+) is the point mass at the origin, which already acts at t = 0
  if (sys.kernel.family == kernels::Family::dirac) F[0] = *sys.kernel.eps;
  // product-integration weights for mu_{m-q}, mu linear on each step: lag
  // cell l contributes beta_l to its near end and alpha_l to its far end
  std::vector<double> aF(N, 0.0), bF(N, 0.0), ac(N), bc(N);
  for (int l = 0; l < N; ++l) {
    const double dG2 = G2[l + 1] - G2[l];
    bF[l] = (dG2 - h * G1[l]) / h;
    aF[l] = (h * G1[l + 1] - dG2) / h;
    bc[l] = h * h * (l / 2.0 + 1.0 / 6.0);
    ac[l] = h * h * (l / 2.0 + 1.0 / 3.0);
  }
  // interior weight q (0 < q < m) and the endpoint weight q = m
  auto interior = [](const std::vector<double>& a, const std::vector<double>& b, int q) { return b[q] + a[q - 1]; };

  Trajectory tr;
  tr.dt = h;
  tr.t.resize(N + 1);
  tr.xi.resize(N + 1);
  tr.xi_t.resize(N + 1);
  tr.mu.resize(N + 1);
  tr.min_margin = sys.trivial_mass() ? 1.0 : std::numeric_limits<double>::infinity();

  const bool diag = sys.trivial_mass();
  VectorXd S = VectorXd::Zero(n);  // trapezoid of mu up to t_{m-1}, excluding the mu_m end weight
  for (int m = 0; m <= N; ++m) {
    const double t = m * h;
    tr.t[m] = t;
    VectorXd Hc = VectorXd::Zero(n), HF = VectorXd::Zero(n);
    for (int q = 1; q < m; ++q) {
      Hc.noalias() += interior(ac, bc, q) * tr.mu[m - q];
      if (!no_kernel) HF.noalias() += interior(aF, bF, q) * tr.mu[m - q];
    }
    if (m > 0) {
      Hc.noalias() += ac[m - 1] * tr.mu[0];
      HF.noalias() += aF[m - 1] * tr.mu[0];
    }
    if (m > 0) S += (m == 1 ? 0.5 : 1.0) * h * tr.mu[m - 1];
    const double Ft = no_kernel ? 0.0 : F[m];
    const VectorXd base_xi = xi0 + t * xi1 + Hc;
    VectorXd rhs = sys.force(t) - c2 * D.cwiseProduct(base_xi) - D.cwiseProduct(Ft * xi1 + HF);
    const double w0c = m > 0 ? bc[0] : 0.0, w0F = m > 0 ? bF[0] : 0.0, w0s = m > 0 ? 0.5 * h : 0.0;
    VectorXd mu;
    if (diag) {
      const VectorXd A = VectorXd::Constant(n, 0.5 * B.L) + (c2 * w0c + w0F) * D;
      mu = rhs.cwiseQuotient(A);
    } else {
      const double margin = sys.coefficient_min(t);
      tr.min_margin = std::min(tr.min_margin, margin);
      if (margin <= kMassFloor)
        throw DegeneracyError("1 + 2k phi drops to " + std::to_string(margin) + " at t = " + std::to_string(t), margin);
      const MatrixXd Mt = sys.mass_mt(t);
      rhs -= Mt * (xi1 + S);
      MatrixXd A = sys.mass_m(t) + w0s * Mt;
      A.diagonal() += (c2 * w0c + w0F) * D;
      Eigen::PartialPivLU<MatrixXd> lu(A);
      const double rcond = lu.rcond();
      if (!(rcond > 1e-13)) throw SingularSolveError("step matrix is numerically singular at t = " + std::to_string(t), 1.0 / rcond);
      tr.max_condition = std::max(tr.max_condition, 1.0 / rcond);
      mu = lu.solve(rhs);
    }
    tr.mu[m] = mu;
    tr.xi_t[m] = xi1 + S + w0s * mu;
    tr.xi[m] = base_xi + w0c * mu;
  }
  return tr;
}

double energy_norm(const Trajectory& traj, const SpectralBasis& basis) {
  double worst = 0.0;
  for (std::size_t m = 0; m < traj.t.size(); ++m) {
    double e = 0.0;
    for (int i = 0; i < basis.n_modes; ++i) {
      const double x = traj.xi[m](i), v = traj.xi_t[m](i);
      e += v * v + (1.0 + basis.eigenvalues[i]) * x * x;
    }
    worst = std::max(worst, 0.5 * basis.L * e);
  }
  return std::sqrt(worst);
}

double energy_distance(const Trajectory& coarse, const Trajectory& fine, const SpectralBasis& basis) {
  if (coarse.t.empty() || fine.t.empty()) throw DomainError("empty trajectory");
  const long stride = std::lround(coarse.dt / fine.dt);
  if (stride < 1 || std::abs(coarse.dt - stride * fine.dt) > 1e-9 * coarse.dt)
    throw DomainError("time grids are not nested");
  Trajectory diff;
  for (std::size_t m = 0; m < coarse.t.size(); ++m) {
    const std::size_t j = m * stride;
    if (j >= fine.t.size()) throw DomainError("fine trajectory is shorter");
    diff.t.push_back(coarse.t[m]);
    diff.xi.push_back(coarse.xi[m] - fine.xi[j]);
    diff.xi_t.push_back(coarse.xi_t[m] - fine.xi_t[j]);
  }
  return energy_norm(diff, basis);
}

double reconstruction_residual(const Trajectory& traj) {
  if (traj.t.empty()) return 0.0;
  double worst = 0.0;
  VectorXd integral = VectorXd::Zero(traj.mu[0].size());
  const VectorXd& xi1 = traj.xi_t[0];
  for (std::size_t m = 0; m < traj.t.size(); ++m) {
    if (m > 0) integral += 0.5 * traj.dt * (traj.mu[m - 1] + traj.mu[m]);
    worst = std::max(worst, (traj.xi_t[m] - xi1 - integral).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

ConvergenceStudy convergence_study(const SemiDiscreteSystem& sys, const VectorXd& xi0, const VectorXd& xi1, double T,
                                   const std::vector<double>& dt_list) {
  if (dt_list.size() < 2) throw DomainError("need at least two step sizes");
  for (std::size_t i = 1; i < dt_list.size(); ++i)
    if (!(dt_list[i] < dt_list[i - 1])) throw DomainError("step sizes must decrease");
  std::vector<Trajectory> runs;
  for (double dt : dt_list) runs.push_back(march(sys, xi0, xi1, T, dt));
  ConvergenceStudy out;
  out.dt.assign(dt_list.begin(), dt_list.end() - 1);
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) out.errors.push_back(energy_distance(runs[i], runs.back(), sys.basis));
  for (std::size_t i = 0; i + 1 < out.errors.size(); ++i)
    out.orders.push_back(std::log(out.errors[i] / out.errors[i + 1]) / std::log(out.dt[i] / out.dt[i + 1]));
  return out;
}

}  // namespace wv::volterra
