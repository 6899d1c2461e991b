#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wv/kernels.hpp"
#include "wv/volterra.hpp"

/// Fixed-point solver for the quasilinear problem
///   ((1 + 2k u) u_t)_t - c^2 u_xx - K * u_txx = f   on (0, L), u = 0 at x = 0, L.
namespace wv::solver {

using volterra::SpectralBasis;
using volterra::Trajectory;
using volterra::VectorXd;

/// Initial data / forcing presets.
///   zero               u0 = u1 = f = 0
///   single_mode        u0 = A sin(j pi x / L)
///   small_gauss_modes  u0 = A exp(-((x - x0)/w)^2) projected on the modes
///   manufactured       exact solution A sin(pi x / L) cos t with its forcing
enum class Preset { zero, single_mode, small_gauss_modes, manufactured };
std::string_view to_string(Preset p);
Preset parse_preset(std::string_view s);

struct DataSpec {
  Preset preset = Preset::small_gauss_modes;
  double amplitude = 0.05;
  int mode = 1;
  double center = 0.5;  // fraction of L
  double width = 0.1;   // fraction of L
};

struct PDEConfig {
  double c = 1.0;
  double k = 0.0;
  kernels::KernelSpec kernel = kernels::KernelSpec::zero();
  DataSpec data;
  double L = 1.0;
  double T = 1.0;
  double dt = 1e-2;
  int n_modes = 16;
  double fp_tol = 1e-10;
  int fp_max_iters = 50;
  double relaxation = 1.0;  // 1 = plain Picard

  void validate() const;
};

/// Modal initial data, forcing projections and, for manufactured data, the
/// exact modal solution.
struct ProblemData {
  VectorXd u0, u1;
  volterra::Forcing forcing;
  std::function<std::pair<VectorXd, VectorXd>(double)> exact;
};

ProblemData make_data(const PDEConfig& cfg, const SpectralBasis& basis);

struct SolveResult {
  Trajectory traj;
  int iterations = 0;
  std::vector<double> fp_residuals;
  double ball_margin = 1.0;  // min over space-time of 1 + 2k u
  bool ball_ok = true;       // 4|k| |u|_inf <= 1
  double linf = 0.0;
  bool converged = false;
};

/// Picard iteration phi -> u through the linear march, starting from the k = 0
/// solution. Throws BallViolation, NonConvergence, DegeneracyError.
SolveResult solve(const PDEConfig& cfg);
SolveResult solve(const PDEConfig& cfg, const ProblemData& data);

/// max over time nodes of the sup in x of |u|: grid search on 8n+1 points
/// followed by local refinement.
double linf_estimate(const Trajectory& traj, const SpectralBasis& basis);
double linf_state(const VectorXd& modes, const SpectralBasis& basis);

struct SmallnessReport {
  double h1_u0_sq = 0.0;     // |u0|_{H1}^2
  double l2_u1_sq = 0.0;     // |u1|_{L2}^2
  double l1_l2_f_sq = 0.0;   // (int_0^T |f|_{L2})^2
  double r0_sq = 0.0;        // sum of the three
  double h3_u0_sq = 0.0;     // |u0|_{H3}^2
  double h2_u1_sq = 0.0;     // |u1|_{H2}^2
  double h1_h1_f_sq = 0.0;   // int_0^T |f|_{H1}^2 + |f_t|_{H1}^2
  double r_sq = 0.0;
};

SmallnessReport check_smallness(const PDEConfig& cfg);

/// (L/2) sum (1 + lambda + ... + lambda^s) xi_i^2.
double sobolev_sq(const VectorXd& modes, const SpectralBasis& basis, int s);

}  // namespace wv::solver
