#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wv/coercivity.hpp"
#include "wv/experiments.hpp"
#include "wv/kernel_io.hpp"
#include "wv/kernels.hpp"
#include "wv/mlf.hpp"
#include "wv/solver.hpp"
#include "wv/volterra.hpp"

using nlohmann::json;
namespace ex = wv::experiments;
namespace kn = wv::kernels;

namespace {

constexpr int kOk = 0;
constexpr int kBelow = 1;
constexpr int kFailure = 2;

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string g(double v, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int mlf_eval(double a, double b, double x, const std::string& regime) {
  const auto r = wv::mlf::ml_eval({a, b, x}, wv::mlf::parse_regime(regime));
  std::cout << "E_{" << g(a) << "," << g(b) << "}(-" << g(x) << ") = " << g(r.value, 17) << "  (" << wv::mlf::to_string(r.regime)
            << ", error estimate " << g(r.est_abs_error, 3) << ")\n";
  std::cout << json{{"a", a}, {"b", b}, {"x", x}, {"value", r.value}, {"regime", std::string(wv::mlf::to_string(r.regime))},
                    {"est_abs_error", r.est_abs_error}}
                   .dump()
            << "\n";
  return kOk;
}

int kernel_eval(const std::string& spec, const std::vector<double>& ts) {
  const auto k = kn::parse_kernel(spec);
  std::cout << "t,value,conv1\n";
  for (double t : ts) std::cout << g(t, 17) << "," << g(kn::eval(k, t), 17) << "," << g(kn::conv_one(k, t), 17) << "\n";
  return kOk;
}

int kernel_norms(const std::string& spec, double T) {
  const auto k = kn::parse_kernel(spec);
  const auto n = kn::norms(k, T);
  json j{{"kernel", k.describe()}, {"T", T}, {"tv", n.l1_or_tv}, {"conv1_l1", n.conv1_l1}, {"sign_changes", kn::sign_changes(k, T)}};
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int kernel_limit(const std::string& spec, double T, int n_points) {
  const auto k = kn::parse_kernel(spec);
  const auto lim = kn::limit_kernel(k);
  json j{{"kernel", k.describe()}, {"limit", lim.describe()}, {"predicted_rate", kn::predicted_rate(k)}};
  if (k.depends_on_eps()) {
    const auto d = kn::diff_conv_one(k, T, n_points);
    j["diff_conv1_l1"] = d.l1;
    j["tv_difference"] = num(kn::tv_difference(k, T));
  }
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int kernel_rate_check(const std::string& spec, const std::string& quantity, std::vector<double> eps, double T, double tol) {
  const auto k = kn::parse_kernel(spec, 1e-3);
  if (eps.empty()) eps = ex::kernel_only_eps_grid();
  const auto r = ex::kernel_only_sweep(k, eps, T, tol);
  const auto& fit = quantity == "conv1" ? r.conv1 : r.diff_conv1;
  if (!fit) throw wv::UnsupportedOperation("quantity '" + quantity + "' has no predicted exponent for " + k.describe());
  std::cout << "eps,value,log_eps,log_value\n";
  for (auto [e, v] : fit->pairs) std::cout << g(e, 10) << "," << g(v, 12) << "," << g(std::log10(e)) << "," << g(std::log10(v)) << "\n";
  std::cout << "# slope " << g(fit->slope, 6) << " predicted " << g(fit->predicted, 6) << " verdict " << ex::to_string(fit->verdict)
            << "\n";
  return fit->verdict == ex::Verdict::below ? kBelow : kOk;
}

int verify(const std::string& spec, double T, std::vector<double> grid, int samples, int steps, const std::string& out) {
  const auto family = kn::parse_kernel(spec, 0.1);
  if (grid.empty()) grid = family.depends_on_eps() ? ex::default_eps_grid() : std::vector<double>{};
  const auto rep = wv::coercivity::a1_report(family, grid, T);
  json j{{"kernel", family.describe()},
         {"T", T},
         {"a1_bound", num(rep.a1_bound)},
         {"a1_uniform", rep.a1_uniform},
         {"c_frakK", num(rep.c_frakK)},
         {"method", std::string(wv::coercivity::to_string(rep.method))},
         {"eps_grid", rep.eps_grid},
         {"a1_values", rep.a1_values},
         {"c_values", rep.c_values},
         {"details", rep.details},
         {"note", rep.note}};
  if (samples > 0) {
    const auto k = grid.empty() ? family : family.with_eps(grid.back());
    const auto q = wv::coercivity::quadratic_form_test(k, T, samples, T / steps);
    j["quadratic_form"] = {{"kernel", k.describe()}, {"min_ratio", q.min_ratio}, {"c_reference", q.c_reference}, {"n_signals", q.n_signals}};
  }
  write_or_print(out, j.dump(2) + "\n");
  std::cout << "\n| kernel | A1 bounded | A2 method | C |\n|---|---|---|---|\n"
            << "| " << family.describe() << " | " << (rep.a1_uniform ? "pass" : "fail") << " (" << g(rep.a1_bound, 4) << ") | "
            << wv::coercivity::to_string(rep.method) << " | " << g(rep.c_frakK, 6) << " |\n";
  return kOk;
}

wv::solver::PDEConfig linear_config(double L, int n, double dt, double T, const std::string& kernel, const std::string& preset,
                                    double amplitude, int mode) {
  wv::solver::PDEConfig c;
  c.L = L;
  c.n_modes = n;
  c.dt = dt;
  c.T = T;
  c.k = 0.0;
  c.kernel = kn::parse_kernel(kernel);
  c.data.preset = wv::solver::parse_preset(preset);
  c.data.amplitude = amplitude;
  c.data.mode = mode;
  c.validate();
  return c;
}

std::string trajectory_csv(const wv::volterra::Trajectory& tr, int every) {
  std::string s = "t";
  const long n = tr.xi.empty() ? 0 : tr.xi.front().size();
  for (long i = 1; i <= n; ++i) s += ",xi_" + std::to_string(i);
  s += "\n";
  for (std::size_t m = 0; m < tr.t.size(); ++m) {
    if (m % static_cast<std::size_t>(every) != 0 && m + 1 != tr.t.size()) continue;
    s += g(tr.t[m], 12);
    for (long i = 0; i < n; ++i) s += "," + g(tr.xi[m][i], 12);
    s += "\n";
  }
  return s;
}

json solve_summary(const wv::solver::SolveResult& r, const wv::solver::PDEConfig& c) {
  const auto basis = wv::volterra::SpectralBasis::make(c.L, c.n_modes);
  json j{{"kernel", c.kernel.describe()},
         {"k", c.k},
         {"T", c.T},
         {"dt", c.dt},
         {"n_modes", c.n_modes},
         {"preset", std::string(wv::solver::to_string(c.data.preset))},
         {"energy_norm", wv::volterra::energy_norm(r.traj, basis)},
         {"linf", r.linf},
         {"ball_margin", r.ball_margin},
         {"ball_ok", r.ball_ok},
         {"iterations", r.iterations},
         {"converged", r.converged},
         {"fp_residuals", r.fp_residuals},
         {"max_condition", num(r.traj.max_condition)},
         {"min_margin", num(r.traj.min_margin)}};
  if (c.data.preset == wv::solver::Preset::manufactured) {
    const auto data = wv::solver::make_data(c, basis);
    auto diff = r.traj;
    for (std::size_t m = 0; m < diff.t.size(); ++m) {
      const auto [xi, xi_t] = data.exact(diff.t[m]);
      diff.xi[m] -= xi;
      diff.xi_t[m] -= xi_t;
    }
    j["manufactured_error"] = wv::volterra::energy_norm(diff, basis);
  }
  return j;
}

int solve_linear(const wv::solver::PDEConfig& c, const std::string& csv, int every, const std::string& out) {
  const auto r = wv::solver::solve(c);
  if (!csv.empty()) write_or_print(csv, trajectory_csv(r.traj, every));
  write_or_print(out, solve_summary(r, c).dump(2) + "\n");
  return kOk;
}

int solve_config(const std::string& path, const std::string& csv, int every, const std::string& out) {
  const auto c = ex::pde_config_from_json(ex::load_config_file(path));
  const auto r = wv::solver::solve(c);
  if (!csv.empty()) write_or_print(csv, trajectory_csv(r.traj, every));
  write_or_print(out, solve_summary(r, c).dump(2) + "\n");
  return kOk;
}

int sweep(const std::vector<std::string>& configs, int jobs, const std::string& output_dir, const std::string& report) {
  std::vector<ex::SweepResult> runs;
  int code = kOk;
  for (const auto& path : configs) {
    auto cfg = ex::load_sweep_config(path);
    if (jobs > 0) cfg.jobs = jobs;
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    std::cerr << "sweep " << cfg.label() << ": " << cfg.eps_list.size() << " eps values\n";
    auto r = ex::run_sweep(cfg);
    for (const auto& w : r.warnings) std::cerr << "warning: " << cfg.label() << ": " << w << "\n";
    std::cout << cfg.label() << ": slope " << g(r.fit.slope, 4) << " predicted " << g(r.fit.predicted, 4) << " verdict "
              << ex::to_string(r.fit.verdict) << ", err/bound growth x" << g(r.bounds.max_growth, 3)
              << (r.dir.empty() ? std::string() : ", artifacts in " + r.dir.string()) << "\n";
    if (r.fit.verdict == ex::Verdict::below) code = kBelow;
    runs.push_back(std::move(r));
  }
  if (!report.empty()) ex::emit_report(runs, report);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Westervelt equation with nonlocal dissipation: kernels, coercivity checks, solver and eps-sweeps"};
  app.require_subcommand(1);
  int code = kOk;

  auto* mlf = app.add_subcommand("mlf", "Mittag-Leffler function")->require_subcommand(1);
  auto* mlf_ev = mlf->add_subcommand("eval", "E_{a,b}(-x) with an error estimate");
  double a = 0.5, b = 1.0, x = 1.0;
  std::string regime = "auto";
  mlf_ev->add_option("--a", a, "order a in (0,1]")->required();
  mlf_ev->add_option("--b", b, "order b > 0")->required();
  mlf_ev->add_option("--x", x, "argument, evaluated at -x")->required();
  mlf_ev->add_option("--regime", regime, "auto|series|contour|asymptotic")->capture_default_str();
  mlf_ev->callback([&] { code = mlf_eval(a, b, x, regime); });

  auto* kern = app.add_subcommand("kernel", "memory kernels")->require_subcommand(1);
  std::string spec;
  double T = 1.0;
  std::vector<double> ts, eps_list;
  int n_points = 1000;
  std::string quantity = "diff-conv1";
  double tol = 0.05;
  auto* k_eval = kern->add_subcommand("eval", "kernel and running integral at times t");
  k_eval->add_option("--kernel", spec, "kernel, e.g. abel:alpha=0.5,eps=0.1")->required();
  k_eval->add_option("--t", ts, "times")->required()->delimiter(',');
  k_eval->callback([&] { code = kernel_eval(spec, ts); });
  auto* k_norms = kern->add_subcommand("norms", "total variation and |K*1| on (0,T)");
  k_norms->add_option("--kernel", spec)->required();
  k_norms->add_option("--T", T)->capture_default_str();
  k_norms->callback([&] { code = kernel_norms(spec, T); });
  auto* k_limit = kern->add_subcommand("limit", "eps -> 0 limit, predicted rate and distance to the limit");
  k_limit->add_option("--kernel", spec)->required();
  k_limit->add_option("--T", T)->capture_default_str();
  k_limit->add_option("--n-points", n_points, "grid for (K_eps - K_0)*1")->capture_default_str();
  k_limit->callback([&] { code = kernel_limit(spec, T, n_points); });
  auto* k_rate = kern->add_subcommand("rate-check", "log-log slope of a closed-form kernel quantity in eps");
  k_rate->add_option("--kernel", spec, "family; eps is replaced by the grid")->required();
  k_rate->add_option("--quantity", quantity, "diff-conv1|conv1")->check(CLI::IsMember({"diff-conv1", "conv1"}))->capture_default_str();
  k_rate->add_option("--eps-list", eps_list, "decreasing eps values (default 1e-3..1e-5)")->delimiter(',');
  k_rate->add_option("--T", T)->capture_default_str();
  k_rate->add_option("--tol", tol)->capture_default_str();
  k_rate->callback([&] { code = kernel_rate_check(spec, quantity, eps_list, T, tol); });

  auto* ver = app.add_subcommand("verify", "uniform bound and coercivity report for a kernel family");
  int samples = 0, steps = 256;
  std::string out;
  ver->add_option("--kernel", spec)->required();
  ver->add_option("--T", T)->capture_default_str();
  ver->add_option("--eps-grid", eps_list, "eps values (default 1e-1..1e-3)")->delimiter(',');
  ver->add_option("--samples", samples, "random signals for the quadratic-form test (0 = skip)")->capture_default_str();
  ver->add_option("--steps", steps, "time steps of the quadratic-form test")->capture_default_str();
  ver->add_option("--out", out, "JSON report file (default stdout)");
  ver->callback([&] { code = verify(spec, T, eps_list, samples, steps, out); });

  auto* lin = app.add_subcommand("solve-linear", "linear problem (k = 0) by Galerkin-Volterra time marching");
  double L = 1.0, dt = 1e-2, amplitude = 0.05;
  int n_modes = 16, mode = 1, every = 1;
  std::string preset = "single-mode", csv;
  spec = "zero";
  lin->add_option("--L", L)->capture_default_str();
  lin->add_option("--n-modes", n_modes)->capture_default_str();
  lin->add_option("--dt", dt)->capture_default_str();
  lin->add_option("--T", T)->capture_default_str();
  lin->add_option("--kernel", spec)->capture_default_str();
  lin->add_option("--preset", preset, "zero|single-mode|small-gauss-modes|manufactured")->capture_default_str();
  lin->add_option("--amplitude", amplitude)->capture_default_str();
  lin->add_option("--mode", mode)->capture_default_str();
  lin->add_option("--csv", csv, "trajectory CSV (t, xi_1..xi_n)");
  lin->add_option("--every", every, "write every n-th step")->check(CLI::PositiveNumber)->capture_default_str();
  lin->add_option("--out", out, "summary JSON file (default stdout)");
  lin->callback([&] { code = solve_linear(linear_config(L, n_modes, dt, T, spec, preset, amplitude, mode), csv, every, out); });

  auto* sol = app.add_subcommand("solve", "quasilinear problem from a TOML or JSON config");
  std::string config;
  sol->add_option("--config", config)->required()->check(CLI::ExistingFile);
  sol->add_option("--csv", csv, "trajectory CSV (t, xi_1..xi_n)");
  sol->add_option("--every", every)->check(CLI::PositiveNumber)->capture_default_str();
  sol->add_option("--out", out, "summary JSON file (default stdout)");
  sol->callback([&] { code = solve_config(config, csv, every, out); });

  auto* sw = app.add_subcommand("sweep", "eps-sweep towards the singular limit");
  std::vector<std::string> configs;
  int jobs = 0;
  std::string output_dir, report;
  sw->add_option("--config", configs, "sweep config(s), TOML or JSON")->required()->check(CLI::ExistingFile);
  sw->add_option("--jobs", jobs, "parallel eps solves (default: hardware threads)");
  sw->add_option("--output-dir", output_dir, "overrides output_dir of the configs");
  sw->add_option("--report", report, "combined markdown report for all runs");
  sw->callback([&] { code = sweep(configs, jobs, output_dir, report); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kFailure;
  } catch (const ex::SweepAborted& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return code;
}
