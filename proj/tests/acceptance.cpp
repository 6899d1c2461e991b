#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "support/mp_oracle.hpp"
#include "wv/coercivity.hpp"
#include "wv/experiments.hpp"
#include "wv/kernels.hpp"
#include "wv/mlf.hpp"
#include "wv/solver.hpp"
#include "wv/volterra.hpp"

namespace fs = std::filesystem;
using wv::kernels::KernelSpec;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// E_{1,1}, E_{1/2,1} against closed forms; adjacent regimes at their switch points
Outcome special_functions() {
  using namespace wv::mlf;
  double e_exp = 0.0, e_erfc = 0.0, e_switch = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = 50.0 * i / 999.0;
    e_exp = std::max(e_exp, std::abs(ml(1.0, 1.0, x) - std::exp(-x)));
  }
  for (int i = 0; i < 1000; ++i) {
    const double x = 10.0 * i / 999.0;
    e_erfc = std::max(e_erfc, std::abs(ml(0.5, 1.0, x) - oracle::erfcx(x)));
  }
  for (double a : {0.3, 0.5, 0.75, 1.0}) {
    for (double b : {0.25, 0.75, 1.0, 1.5, 2.75, 4.0}) {
      const double s = ml_eval({a, b, kSeriesMaxX}, RegimeChoice::series).value;
      const double c = ml_eval({a, b, kSeriesMaxX}, RegimeChoice::contour).value;
      const double c2 = ml_eval({a, b, kAsymptoticMinX}, RegimeChoice::contour).value;
      const double as = ml_eval({a, b, kAsymptoticMinX}, RegimeChoice::asymptotic).value;
      e_switch = std::max({e_switch, std::abs(s - c), std::abs(c2 - as)});
    }
  }
  return {e_exp <= 1e-12 && e_erfc <= 1e-10 && e_switch <= 1e-9,
          "exp err " + fmt("%.2e", e_exp) + ", erfcx err " + fmt("%.2e", e_erfc) + ", regime switch " + fmt("%.2e", e_switch)};
}

// d/dt of t^b E_{a,b+1}(-(lt)^a) is t^{b-1} E_{a,b}(-(lt)^a)
Outcome antiderivative_identity() {
  using namespace wv::mlf;
  double worst = 0.0;
  int n = 0;
  const std::vector<double> grid{0.3, 0.5, 0.7, 1.0};
  for (double a : grid) {
    for (double b : grid) {
      for (double lam : {1.0, 10.0}) {
        for (int i = 0; i < 37; ++i) {
          const double t = std::pow(10.0, -6.0 + 9.0 * i / 36.0);
          const double h = 1e-4 * t;
          const double fd = (ml_antiderivative(a, b, lam, t + h) - ml_antiderivative(a, b, lam, t - h)) / (2 * h);
          const double k = std::pow(t, b - 1.0) * ml(a, b, std::pow(lam * t, a));
          worst = std::max(worst, std::abs(fd - k) / std::max(std::abs(k), 1e-7));
          ++n;
        }
      }
    }
  }
  return {worst <= 1e-5, std::to_string(n) + " points, max rel err " + fmt("%.2e", worst)};
}

Outcome fourier_constants() {
  using namespace wv::coercivity;
  bool exact = true;
  for (double a : {0.1, 0.3, 0.5, 0.7, 1.0})
    for (double ratio : {0.01, 1.0, 100.0}) exact = exact && fourier_constant(a, a, ratio, 1.0) == 2.0 * std::numbers::pi;
  double worst = 0.0;
  for (auto [a, b] : std::vector<std::pair<double, double>>{{1.0, 0.3}, {1.0, 0.7}, {0.9, 0.5}, {0.7, 0.7}}) {
    for (double eps : {1.0, 0.1}) {
      const double closed = fourier_constant(a, b, 1.0, eps);
      const double numeric = re_m_infimum(KernelSpec::mittag_leffler(a, b, eps, 1.0)).value;
      worst = std::max(worst, std::abs(numeric - closed) / closed);
    }
  }
  return {exact && worst <= 1e-6, std::string("equal orders ") + (exact ? "exactly 2 pi" : "NOT 2 pi") + ", max rel err " + fmt("%.2e", worst)};
}

Outcome resolvents() {
  using namespace wv::coercivity;
  double abel = 0.0, second = 0.0;
  for (double al : {0.2, 0.5, 0.8}) {
    const KernelSpec k = KernelSpec::abel(al, 0.05, 2.0);
    abel = std::max(abel, verify_resolvent(k, resolvent_of(k), 1.0, 200));
  }
  for (double al : {0.3, 0.5, 0.9}) {
    for (double eps : {0.1, 0.01}) {
      const KernelSpec k = wv::kernels::from_gfe({wv::kernels::GfeKind::gfe_ii, al}, eps, 1.5);
      second = std::max(second, verify_resolvent(k, resolvent_of(k), 1.0, 200));
    }
  }
  return {abel <= 1e-12 && second <= 1e-8, "Abel residual " + fmt("%.2e", abel) + ", second-kind law residual " + fmt("%.2e", second)};
}

Outcome quadratic_form() {
  using namespace wv::coercivity;
  using wv::kernels::GfeKind;
  const std::vector<std::pair<std::string, KernelSpec>> cases{
      {"exponential", KernelSpec::exponential(0.1)},
      {"GFE 0.6", wv::kernels::from_gfe({GfeKind::gfe, 0.6}, 0.05, 1.0)},
      {"Abel 0.5", KernelSpec::abel(0.5, 0.1, 1.0)},
      {"GFE II 0.5", wv::kernels::from_gfe({GfeKind::gfe_ii, 0.5}, 0.05, 1.0)}};
  bool ok = true;
  std::string detail;
  for (const auto& [name, k] : cases) {
    const QuadraticFormResult r = quadratic_form_test(k, 1.0, 20, 1.0 / 200);
    ok = ok && r.n_signals == 20 && r.c_reference > 0.0 && r.min_ratio >= 0.95 * r.c_reference;
    detail += (detail.empty() ? "" : ", ") + name + " " + fmt("%.3g", r.min_ratio) + "/" + fmt("%.3g", r.c_reference);
  }
  return {ok, "min ratio/reference: " + detail};
}

Outcome kernel_asymptotics() {
  namespace ex = wv::experiments;
  const auto grid = ex::kernel_only_eps_grid();
  const auto r1 = ex::kernel_only_sweep(KernelSpec::mittag_leffler(0.5, 0.75, 1e-3, 1.0), grid, 1.0, 0.05);
  const auto r2 = ex::kernel_only_sweep(KernelSpec::mittag_leffler(0.6, 0.6, 1e-3, 1.0), grid, 1.0, 0.05);
  const auto r3 = ex::kernel_only_sweep(KernelSpec::mittag_leffler_fixed_ratio(0.8, 0.4, 1e-3, 1.0), grid, 1.0, 0.05);
  const bool ok = r1.diff_conv1 && r2.diff_conv1 && r3.conv1 && std::abs(r1.diff_conv1->slope - 0.5) <= 0.05 &&
                  std::abs(r2.diff_conv1->slope - 0.6) <= 0.05 && std::abs(r3.conv1->slope - 0.4) <= 0.05;
  return {ok, "slopes (0.5,0.75) " + fmt("%.4f", r1.diff_conv1->slope) + ", (0.6,0.6) " + fmt("%.4f", r2.diff_conv1->slope) +
                  ", (0.8,0.4) fixed ratio " + fmt("%.4f", r3.conv1->slope)};
}

Outcome linear_oracle() {
  using namespace wv::volterra;
  auto error_ratio = [&](const KernelSpec& k, double T, double dt) {
    const SpectralBasis b = SpectralBasis::make(1.0, 4);
    const auto sys = assemble(b, {}, k, {}, 0.0, 1.0);
    const double lam = b.eigenvalues[1], d = k.family == wv::kernels::Family::dirac ? *k.eps : 0.0;
    Eigen::Matrix2d A;
    A << 0, 1, -lam, -d * lam;
    auto err = [&](double h) {
      Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4), x1 = Eigen::VectorXd::Zero(4);
      x0(1) = 0.7;
      x1(1) = -0.4;
      Trajectory tr = march(sys, x0, x1, T, h);
      for (std::size_t m = 0; m < tr.t.size(); ++m) {
        const Eigen::Vector2d y = Eigen::Matrix2d((A * tr.t[m]).exp()) * Eigen::Vector2d(0.7, -0.4);
        tr.xi[m](1) -= y(0);
        tr.xi_t[m](1) -= y(1);
      }
      return energy_norm(tr, b);
    };
    return err(dt) / err(dt / 2);
  };
  const double harmonic = error_ratio(KernelSpec::zero(), 4.0, 0.01);
  const double damped = error_ratio(KernelSpec::dirac(0.05), 2.0, 0.01);
  auto in_band = [](double r) { return r >= 3.6 && r <= 4.4; };
  return {in_band(harmonic) && in_band(damped),
          "error ratio on halving dt: harmonic " + fmt("%.3f", harmonic) + ", damped " + fmt("%.3f", damped)};
}

Outcome manufactured() {
  using namespace wv::solver;
  PDEConfig cfg;
  cfg.k = 0.3;
  cfg.kernel = KernelSpec::abel(0.5, 0.1, 1.0);
  cfg.data = {Preset::manufactured, 0.05};
  cfg.T = 1.0;
  cfg.dt = 1.0 / 1024;
  cfg.n_modes = 32;
  cfg.fp_tol = 1e-12;
  const auto b = wv::volterra::SpectralBasis::make(cfg.L, cfg.n_modes);
  const ProblemData d = make_data(cfg, b);
  const SolveResult r = solve(cfg, d);
  auto diff = r.traj;
  for (std::size_t m = 0; m < diff.t.size(); ++m) {
    const auto [xi, xi_t] = d.exact(diff.t[m]);
    diff.xi[m] -= xi;
    diff.xi_t[m] -= xi_t;
  }
  const double err = wv::volterra::energy_norm(diff, b);
  // the exact solution lies in the first sine mode: no spectral tail
  const double budget = 5.0 * cfg.dt * cfg.dt;
  bool monotone = true;
  for (std::size_t j = 1; j < r.fp_residuals.size(); ++j) monotone = monotone && r.fp_residuals[j] < r.fp_residuals[j - 1];
  return {r.converged && r.ball_ok && monotone && err <= budget,
          "error " + fmt("%.3e", err) + " vs budget " + fmt("%.3e", budget) + ", " + std::to_string(r.iterations) +
              " iterations, residuals " + (monotone ? "monotone" : "NOT monotone") + ", ball " + (r.ball_ok ? "ok" : "violated")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const std::vector<std::string> kSweeps{"abel.toml", "ml_0.5_0.75.toml", "ml_0.8_0.4_rho1.toml"};

std::vector<wv::experiments::SweepResult> run_sweeps(const fs::path& out) {
  std::vector<wv::experiments::SweepResult> runs;
  for (const auto& name : kSweeps) {
    auto cfg = wv::experiments::load_sweep_config(fs::path(WV_SOURCE_DIR) / "configs" / name);
    cfg.output_dir = out;
    runs.push_back(wv::experiments::run_sweep(cfg));
  }
  return runs;
}

fs::path artifacts_root() { return fs::path(WV_BINARY_DIR) / "acceptance_sweeps"; }

Outcome singular_limits() {
  fs::remove_all(artifacts_root());
  const auto runs = run_sweeps(artifacts_root() / "run1");
  wv::experiments::emit_report(runs, artifacts_root() / "run1" / "report.md");
  bool ok = true;
  std::string detail;
  for (const auto& r : runs) {
    const bool pass = r.fit.slope >= r.fit.predicted - 0.15 && r.bounds.within_band;
    ok = ok && pass;
    detail += (detail.empty() ? "" : "; ") + r.cfg.label() + " slope " + fmt("%.3f", r.fit.slope) + " (predicted " +
              fmt("%.2f", r.fit.predicted) + ", " + std::string(wv::experiments::to_string(r.fit.verdict)) + "), ratio growth x" +
              fmt("%.2f", r.bounds.max_growth);
  }
  return {ok, detail};
}

Outcome determinism() {
  run_sweeps(artifacts_root() / "run2");
  bool same = true;
  int files = 0;
  for (const auto& entry : fs::directory_iterator(artifacts_root() / "run1")) {
    if (!entry.is_directory()) continue;
    const fs::path a = entry.path() / "results.csv", b = artifacts_root() / "run2" / entry.path().filename() / "results.csv";
    same = same && fs::exists(a) && fs::exists(b) && slurp(a) == slurp(b);
    ++files;
  }
  return {same && files == static_cast<int>(kSweeps.size()),
          std::to_string(files) + " results.csv files " + (same ? "byte-identical" : "DIFFER") + " across reruns"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "Mittag-Leffler evaluation", 1.0, special_functions},
      {2, "antiderivative identity", 10.0, antiderivative_identity},
      {3, "Fourier coercivity constants", 5.0, fourier_constants},
      {4, "resolvent identities", 30.0, resolvents},
      {5, "quadratic-form coercivity", 120.0, quadratic_form},
      {6, "kernel-norm asymptotics", 10.0, kernel_asymptotics},
      {7, "linear solver second order", 30.0, linear_oracle},
      {8, "quasilinear manufactured solution", 120.0, manufactured},
      {9, "singular-limit rates", 900.0, singular_limits},
      {10, "sweep determinism", 900.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s criterion %2d  %-34s %s [%.2f s of %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(),
                secs, c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
