#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wv/kernels.hpp"

/// Sine-Galerkin semi-discretization of the linearized problem
///   (m u_t)_t - c^2 u_xx - K * u_txx = f,   m = 1 + 2k phi,
/// on (0, L) with Dirichlet conditions, marched in time through the
/// second-kind Volterra equation for mu = xi_tt.
namespace wv::volterra {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Modes v_i(x) = sin(i pi x / L), i = 1..n, with (v_i, v_j) = (L/2) delta_ij.
struct SpectralBasis {
  double L = 1.0;
  int n_modes = 0;
  std::vector<double> eigenvalues;  // (i pi / L)^2
  std::vector<double> quad_points;  // x_j = j L / (Q + 1), j = 1..Q
  MatrixXd sines;                   // Q x n, sines(j, i) = v_{i+1}(x_j)
  MatrixXd sin_cos;                 // n x (2n+1): int_0^L v_l cos(q pi x / L) dx

  /// Q defaults to the smallest admissible size ceil(3n/2).
  static SpectralBasis make(double L, int n_modes, int n_points = 0);

  VectorXd to_grid(const VectorXd& modes) const;
  /// Discrete sine transform; exact for data band-limited to Q modes.
  VectorXd from_grid(const VectorXd& values) const;
  /// Value of the expansion at arbitrary x.
  double eval(const VectorXd& modes, double x) const;
};

/// Time-dependent modal field phi with its time derivative. Either callables
/// or a tabulation on a uniform grid (nodes must then be hit exactly).
struct CoefficientField {
  std::function<VectorXd(double)> phi;
  std::function<VectorXd(double)> phi_t;
  /// Times at which the non-degeneracy floor is checked on assembly.
  std::vector<double> sample_times;
};

struct Trajectory;
CoefficientField field_from(const Trajectory& traj);

/// Modal projections (f(t), v_i).
using Forcing = std::function<VectorXd(double)>;

/// Floor for the leading coefficient 1 + 2k phi.
inline constexpr double kMassFloor = 0.5;

struct SemiDiscreteSystem {
  SpectralBasis basis;
  kernels::KernelSpec kernel;
  double c = 1.0;
  double k = 0.0;
  std::optional<CoefficientField> field;  // empty: m == 1
  Forcing forcing;                        // empty: f == 0
  double margin = 1.0;                    // min of 1 + 2k phi over the sampled times

  /// ((1 + 2k phi(t)) v_i, v_j), exact sine/cosine moments.
  MatrixXd mass_m(double t) const;
  /// (2k phi_t(t) v_i, v_j).
  MatrixXd mass_mt(double t) const;
  /// Diagonal of (v_i', v_j') = (L/2) lambda_i.
  VectorXd stiffness() const;
  VectorXd force(double t) const;
  /// True when the mass matrix is the constant (L/2) I.
  bool trivial_mass() const { return !field || k == 0.0; }
  /// min over the collocation grid of 1 + 2k phi(t).
  double coefficient_min(double t) const;
};

/// Throws DegeneracyError when 1 + 2k phi <= kMassFloor at a sampled time.
SemiDiscreteSystem assemble(const SpectralBasis& basis, std::optional<CoefficientField> field,
                            const kernels::KernelSpec& kernel, Forcing f, double k, double c);

struct Trajectory {
  std::vector<double> t;
  std::vector<VectorXd> xi, xi_t, mu;
  double min_margin = 1.0;
  double max_condition = 1.0;  // 1-norm condition estimate of the step matrices
  double dt = 0.0;
};

/// Piecewise-linear product integration in mu with exact kernel moments.
Trajectory march(const SemiDiscreteSystem& sys, const VectorXd& xi0, const VectorXd& xi1, double T, double dt);

/// max_t sqrt(|u_t|^2 + |u|^2 + |u_x|^2) by Parseval.
double energy_norm(const Trajectory& traj, const SpectralBasis& basis);
/// Energy norm of the difference of two trajectories on the nodes of the coarser one.
double energy_distance(const Trajectory& coarse, const Trajectory& fine, const SpectralBasis& basis);

/// max over nodes of |xi_t - (xi_1 + trapezoid of mu)|.
double reconstruction_residual(const Trajectory& traj);

struct ConvergenceStudy {
  std::vector<double> dt;
  std::vector<double> errors;  // against the finest run
  std::vector<double> orders;  // between consecutive errors
};

ConvergenceStudy convergence_study(const SemiDiscreteSystem& sys, const VectorXd& xi0, const VectorXd& xi1, double T,
                                   const std::vector<double>& dt_list);

}  // namespace wv::volterra
