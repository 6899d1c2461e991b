#include "wv/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#define TOML_ENABLE_FORMATTERS 1
#include <toml.hpp>

namespace wv::experiments {
namespace {

using solver::PDEConfig;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + p.string());
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

PDEConfig pde_fields(const nlohmann::json& j) {
  PDEConfig c;
  c.c = get_or(j, "c", c.c);
  c.k = get_or(j, "k", c.k);
  c.L = get_or(j, "L", c.L);
  c.T = get_or(j, "T", c.T);
  c.n_modes = get_or(j, "n_modes", c.n_modes);
  c.fp_tol = get_or(j, "fp_tol", c.fp_tol);
  c.fp_max_iters = get_or(j, "fp_max_iters", c.fp_max_iters);
  c.relaxation = get_or(j, "relaxation", c.relaxation);
  if (j.contains("dt")) c.dt = j.at("dt").get<double>();
  else if (j.contains("n_steps")) c.dt = c.T / j.at("n_steps").get<int>();
  if (j.contains("data")) {
    const auto& d = j.at("data");
    if (d.contains("preset")) c.data.preset = solver::parse_preset(d.at("preset").get<std::string>());
    c.data.amplitude = get_or(d, "amplitude", c.data.amplitude);
    c.data.mode = get_or(d, "mode", c.data.mode);
    c.data.center = get_or(d, "center", c.data.center);
    c.data.width = get_or(d, "width", c.data.width);
  }
  return c;
}

// Words for the regime each family probes.
std::string regime_text(const KernelSpec& k) {
  using kernels::Family;
  switch (k.family) {
    case Family::abel:
      return "vanishing sound diffusivity with Abel memory: the limit is the inviscid equation, expected rate eps";
    case Family::dirac:
      return "vanishing strong damping: the limit is the inviscid equation, expected rate eps";
    case Family::exponential:
      return "exponential relaxation kernel: the limit is the strongly damped equation, expected rate eps^(1/2)";
    case Family::mittag_leffler:
      if (*k.b >= *k.a)
        return "Mittag-Leffler kernel with a <= b: the limit carries the fractional damping tau^(a-b) g_(b-a), expected rate eps^(a/2)";
      return "Mittag-Leffler kernel with a > b at fixed ratio tau/eps: the limit is the inviscid equation, expected rate eps^((a-b)/2)";
    default: return "degenerate family";
  }
}

}  // namespace

std::string_view to_string(BoundMode m) { return m == BoundMode::tv ? "tv" : "sqrt_conv1"; }

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::match: return "match";
    case Verdict::above: return "above";
    case Verdict::below: return "below";
  }
  return "?";
}

BoundMode parse_bound_mode(std::string_view s) {
  if (s == "sqrt_conv1") return BoundMode::sqrt_conv1;
  if (s == "tv") return BoundMode::tv;
  throw DomainError("unknown bound mode '" + std::string(s) + "'");
}

std::vector<double> default_eps_grid() {
  return {1e-1, std::pow(10.0, -1.5), 1e-2, std::pow(10.0, -2.5), 1e-3};
}

std::vector<double> kernel_only_eps_grid() {
  return {1e-3, std::pow(10.0, -3.5), 1e-4, std::pow(10.0, -4.5), 1e-5};
}

void SweepConfig::validate() const {
  base.validate();
  if (eps_list.size() < 2) throw DomainError("a sweep needs at least two eps values");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw DomainError("eps values must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw DomainError("eps values must decrease");
  }
  if (!(rate_tol > 0.0)) throw DomainError("rate_tol must be positive");
  if (!limit && !kernels::has_limit(base.kernel))
    throw UnsupportedOperation("kernel '" + base.kernel.describe() + "' has no eps -> 0 limit");
}

std::string SweepConfig::label() const {
  if (!name.empty()) return name;
  const KernelSpec& k = base.kernel;
  std::string s(kernels::to_string(k.family));
  for (const auto& v : {k.a, k.b, k.alpha})
    if (v) s += "_" + fmt("%g", *v);
  if (k.fixed_ratio) s += "_rho" + fmt("%g", *k.rho);
  return s;
}

nlohmann::json toml_to_json(std::string_view text) {
  toml::table tbl;
  try {
    tbl = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "TOML parse error at line " << e.source().begin.line << ": " << e.description();
    throw DomainError(os.str());
  }
  std::ostringstream os;
  os << toml::json_formatter{tbl};
  return nlohmann::json::parse(os.str());
}

PDEConfig pde_config_from_json(const nlohmann::json& j) {
  try {
    PDEConfig c = pde_fields(j);
    if (j.contains("kernel")) c.kernel = kernels::kernel_from_json(j.at("kernel"));
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed solve config: ") + e.what());
  }
}

nlohmann::json load_config_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  if (path.extension() == ".toml") return toml_to_json(text);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DomainError(path.string() + ": " + e.what());
  }
}

SweepConfig sweep_config_from_json(const nlohmann::json& j) {
  SweepConfig c;
  try {
    c.name = get_or<std::string>(j, "name", "");
    if (!j.contains("pde")) throw DomainError("sweep config needs a [pde] table");
    const auto& p = j.at("pde");
    c.base = pde_fields(p);
    if (!p.contains("kernel")) throw DomainError("sweep config needs pde.kernel");
    const std::vector<double> eps = j.contains("eps") ? j.at("eps").get<std::vector<double>>() : default_eps_grid();
    c.eps_list = eps;
    c.base.kernel = kernels::kernel_from_json(p.at("kernel"), eps.front());
    if (j.contains("limit") && !(j.at("limit").is_string() && j.at("limit").get<std::string>() == "auto"))
      c.limit = kernels::kernel_from_json(j.at("limit"));
    if (j.contains("bound")) c.bound_mode = parse_bound_mode(j.at("bound").get<std::string>());
    c.rate_tol = get_or(j, "rate_tol", c.rate_tol);
    if (j.contains("predicted")) c.predicted = j.at("predicted").get<double>();
    c.output_dir = get_or<std::string>(j, "output_dir", "");
    c.auto_dt = get_or(j, "auto_dt", c.auto_dt);
    c.max_dt_halvings = get_or(j, "max_dt_halvings", c.max_dt_halvings);
    c.timestamp = get_or(j, "timestamp", c.timestamp);
    c.jobs = get_or(j, "jobs", c.jobs);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed sweep config: ") + e.what());
  }
  c.validate();
  return c;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  SweepConfig c = sweep_config_from_json(load_config_file(path));
  if (!c.output_dir.empty() && c.output_dir.is_relative()) c.output_dir = (path.parent_path() / c.output_dir).lexically_normal();
  return c;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& pairs, double predicted, double tol) {
  RateFit f;
  f.pairs = pairs;
  f.predicted = predicted;
  std::vector<double> x, y;
  for (auto [e, v] : pairs) {
    if (v > 0.0 && e > 0.0) {
      x.push_back(std::log(e));
      y.push_back(std::log(v));
    }
  }
  if (x.empty() && !pairs.empty() &&
      std::all_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.second == 0.0; })) {
    f.exact = true;
    f.slope = std::numeric_limits<double>::quiet_NaN();
    f.verdict = Verdict::match;
    return f;
  }
  if (x.size() < 2) throw DomainError("rate fit needs at least two positive values");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  if (std::abs(f.slope - predicted) <= tol) f.verdict = Verdict::match;
  else f.verdict = f.slope > predicted ? Verdict::above : Verdict::below;
  return f;
}

BoundCheck bound_check(const std::vector<SweepPoint>& points) {
  BoundCheck b;
  b.exact = !points.empty() && std::all_of(points.begin(), points.end(), [](const SweepPoint& p) { return p.err == 0.0 && p.bound == 0.0; });
  for (const auto& p : points) {
    double r;
    if (p.bound > 0.0) r = p.err / p.bound;
    else r = p.err == 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
    b.ratios.push_back(r);
    if (!std::isnan(r)) b.max_ratio = std::max(b.max_ratio, r);
  }
  // points come with decreasing eps; growth towards small eps contradicts err <= C bound
  for (std::size_t i = 0; i < b.ratios.size(); ++i)
    for (std::size_t j = i + 1; j < b.ratios.size(); ++j)
      if (b.ratios[i] > 0.0 && std::isfinite(b.ratios[i]) && !std::isnan(b.ratios[j]))
        b.max_growth = std::max(b.max_growth, b.ratios[j] / b.ratios[i]);
  b.within_band = b.max_growth <= 3.0;
  return b;
}

double bound_quantity(const KernelSpec& k, double T, BoundMode mode) {
  if (k.family == kernels::Family::zero) return 0.0;
  if (mode == BoundMode::tv) return kernels::tv_difference(k, T);
  return std::sqrt(kernels::diff_conv_one_l1(k, T));
}

SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  SweepResult out;
  out.cfg = cfg;
  out.limit = cfg.limit ? *cfg.limit : kernels::limit_kernel(cfg.base.kernel);
  const double span = std::log10(cfg.eps_list.front() / cfg.eps_list.back());
  if (cfg.eps_list.size() < 4 || span < 2.0 - 1e-9)
    out.warnings.push_back("eps grid has " + std::to_string(cfg.eps_list.size()) + " points over " + fmt("%.2f", span) +
                           " decades; at least 4 points over 2 decades are recommended");
  if (cfg.limit && !(*cfg.limit == kernels::limit_kernel(cfg.base.kernel)))
    out.warnings.push_back("explicit limit kernel differs from the automatic one; bounds refer to the automatic limit");

  auto kernel_at = [&](double e) { return cfg.base.kernel.depends_on_eps() ? cfg.base.kernel.with_eps(e) : cfg.base.kernel; };
  auto solve_with = [&](const KernelSpec& k, double dt) {
    PDEConfig c = cfg.base;
    c.kernel = k;
    c.dt = dt;
    return solver::solve(c);
  };
  const volterra::SpectralBasis basis = volterra::SpectralBasis::make(cfg.base.L, cfg.base.n_modes);

  // time step: self-convergence at the largest eps must sit well below its error
  double dt = cfg.base.dt;
  std::optional<solver::SolveResult> limit_sol, first_sol;
  const int max_attempts = cfg.auto_dt ? cfg.max_dt_halvings + 1 : 1;
  for (int attempt = 0; attempt < max_attempts; ++attempt, dt /= 2.0) {
    DtTrial trial;
    trial.dt = dt;
    try {
      limit_sol = solve_with(out.limit, dt);
      first_sol = solve_with(kernel_at(cfg.eps_list.front()), dt);
      trial.err_eps_max = volterra::energy_distance(first_sol->traj, limit_sol->traj, basis);
      if (cfg.auto_dt) {
        const auto fine = solve_with(kernel_at(cfg.eps_list.front()), dt / 2.0);
        trial.self_error = volterra::energy_distance(first_sol->traj, fine.traj, basis);
      }
      out.dt_trials.push_back(trial);
      if (!cfg.auto_dt || trial.self_error < 0.1 * trial.err_eps_max) break;
    } catch (const std::runtime_error& e) {
      trial.failure = e.what();
      out.dt_trials.push_back(trial);
      limit_sol.reset();
      first_sol.reset();
    }
  }
  dt = out.dt_trials.back().dt;
  if (!limit_sol) throw SweepAborted("no admissible time step: " + out.dt_trials.back().failure, {cfg.eps_list.front()});
  if (cfg.auto_dt && !(out.dt_trials.back().self_error < 0.1 * out.dt_trials.back().err_eps_max))
    out.warnings.push_back("time-step check not met after " + std::to_string(cfg.max_dt_halvings) + " halvings");
  out.dt = dt;

  // eps points in parallel; each worker owns its solve
  const std::size_t n = cfg.eps_list.size();
  std::vector<SweepPoint> points(n);
  std::vector<std::string> errors(n);
  points[0] = {cfg.eps_list[0], out.dt_trials.back().err_eps_max, 0.0, first_sol->iterations, first_sol->ball_ok};
  std::atomic<std::size_t> next{1};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const auto r = solve_with(kernel_at(cfg.eps_list[i]), dt);
        points[i] = {cfg.eps_list[i], volterra::energy_distance(r.traj, limit_sol->traj, basis), 0.0, r.iterations, r.ball_ok};
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const int jobs = std::clamp(cfg.jobs > 0 ? cfg.jobs : hw, 1, static_cast<int>(n));
  {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  std::vector<double> failed;
  std::string msg;
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      failed.push_back(cfg.eps_list[i]);
      msg += "\n  eps=" + fmt("%g", cfg.eps_list[i]) + ": " + errors[i];
    }
  }
  if (!failed.empty()) throw SweepAborted("sweep '" + cfg.label() + "' failed at " + std::to_string(failed.size()) + " eps values:" + msg, failed);

  for (auto& p : points) p.bound = bound_quantity(kernel_at(p.eps), cfg.base.T, cfg.bound_mode);
  out.points = points;
  std::vector<std::pair<double, double>> pairs;
  for (const auto& p : points) pairs.push_back({p.eps, p.err});
  const double predicted = cfg.predicted ? *cfg.predicted : kernels::predicted_rate(kernel_at(cfg.eps_list.front()));
  out.fit = fit_rate(pairs, predicted, cfg.rate_tol);
  out.bounds = bound_check(points);
  if (!out.bounds.within_band) out.warnings.push_back("err/bound ratio grows by more than x3 towards small eps");

  if (!cfg.output_dir.empty()) {
    std::string folder = cfg.label();
    if (cfg.timestamp) {
      const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
      char buf[32];
      std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", std::gmtime(&now));
      folder += std::string("_") + buf;
    }
    out.dir = cfg.output_dir / folder;
    write_artifacts(out, out.dir);
  }
  return out;
}

KernelOnlyResult kernel_only_sweep(const KernelSpec& family, const std::vector<double>& eps_list, double T, double tol) {
  if (eps_list.size() < 2) throw DomainError("need at least two eps values");
  KernelOnlyResult r;
  using kernels::Family;
  const bool ml_above = family.family == Family::mittag_leffler && *family.a > *family.b;
  if (kernels::has_limit(family)) {
    std::vector<std::pair<double, double>> pairs;
    for (double e : eps_list) pairs.push_back({e, kernels::diff_conv_one_l1(family.with_eps(e), T)});
    double predicted = 1.0;
    if (family.family == Family::mittag_leffler) predicted = ml_above ? *family.a - *family.b : *family.a;
    r.diff_conv1 = fit_rate(pairs, predicted, tol);
  }
  if (ml_above) {
    std::vector<std::pair<double, double>> pairs;
    for (double e : eps_list) pairs.push_back({e, kernels::norms(family.with_eps(e), T).conv1_l1});
    // fixed ratio: |K*1|_{L1} ~ eps^{a-b}; otherwise the amplitude adds eps^{b-a}
    r.conv1 = fit_rate(pairs, family.fixed_ratio ? *family.a - *family.b : 0.0, tol);
  }
  return r;
}

std::string results_csv(const SweepResult& r) {
  std::string s = "eps,err_E,bound,log10_eps,log10_err\n";
  for (const auto& p : r.points) {
    s += fmt("%.10e", p.eps) + "," + fmt("%.10e", p.err) + "," + fmt("%.10e", p.bound) + "," +
         fmt("%.6f", std::log10(p.eps)) + "," + (p.err > 0.0 ? fmt("%.6f", std::log10(p.err)) : std::string("-inf")) + "\n";
  }
  return s;
}

nlohmann::json fit_json(const SweepResult& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["label"] = r.cfg.label();
  j["slope"] = num(r.fit.slope);
  j["intercept"] = num(r.fit.intercept);
  j["r_squared"] = num(r.fit.r_squared);
  j["predicted"] = r.fit.predicted;
  j["verdict"] = std::string(to_string(r.fit.verdict));
  j["rate_tol"] = r.cfg.rate_tol;
  j["exact"] = r.fit.exact;
  j["kernel"] = kernels::kernel_to_json(r.cfg.base.kernel);
  j["limit"] = kernels::kernel_to_json(r.limit);
  j["dt"] = r.dt;
  j["bound_mode"] = std::string(to_string(r.cfg.bound_mode));
  j["bound_max_ratio"] = num(r.bounds.max_ratio);
  j["bound_max_growth"] = num(r.bounds.max_growth);
  j["bound_within_band"] = r.bounds.within_band;
  j["warnings"] = r.warnings;
  return j;
}

std::string plot_script(const SweepResult& r) {
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set logscale xy\n"
     << "set key left top\n"
     << "set xlabel 'eps'\n"
     << "set ylabel 'energy-norm distance to the limit'\n"
     << "set title '" << r.cfg.label() << "'\n";
  if (!r.fit.exact) {
    os << "p = " << fmt("%.6f", r.fit.slope) << "\n"
       << "C = " << fmt("%.6e", std::exp(r.fit.intercept)) << "\n"
       << "q = " << fmt("%.6f", r.fit.predicted) << "\n"
       << "D = " << fmt("%.6e", r.points.front().err / std::pow(r.points.front().eps, r.fit.predicted)) << "\n"
       << "plot 'results.csv' every ::1 using 1:2 with linespoints pt 7 title 'error', \\\n"
       << "     C*x**p title sprintf('fit, slope %.3f', p), \\\n"
       << "     D*x**q dashtype 2 title sprintf('predicted, slope %.3f', q)\n";
  } else {
    os << "plot 'results.csv' every ::1 using 1:2 with linespoints title 'error'\n";
  }
  return os.str();
}

std::string report_markdown(std::vector<const SweepResult*> runs) {
  std::sort(runs.begin(), runs.end(), [](const SweepResult* a, const SweepResult* b) { return a->cfg.label() < b->cfg.label(); });
  std::ostringstream os;
  os << "# Singular-limit sweeps\n\n";
  if (runs.empty()) {
    os << "No runs.\n";
    return os.str();
  }
  for (const SweepResult* r : runs) {
    os << "## " << r->cfg.label() << "\n\n"
       << "Kernel `" << r->cfg.base.kernel.describe() << "`, limit `" << r->limit.describe() << "`.\n\n"
       << "Regime: " << regime_text(r->cfg.base.kernel) << ".\n\n"
       << "Setup: L = " << r->cfg.base.L << ", " << r->cfg.base.n_modes << " modes, k = " << r->cfg.base.k
       << ", T = " << r->cfg.base.T << ", dt = " << fmt("%.6g", r->dt) << ", data `" << solver::to_string(r->cfg.base.data.preset)
       << "` (amplitude " << r->cfg.base.data.amplitude << ").\n\n"
       << "| eps | err_E | bound | err/bound | fixed-point iterations |\n|---|---|---|---|---|\n";
    for (std::size_t i = 0; i < r->points.size(); ++i) {
      const auto& p = r->points[i];
      os << "| " << fmt("%.4g", p.eps) << " | " << fmt("%.4e", p.err) << " | " << fmt("%.4e", p.bound) << " | "
         << (std::isnan(r->bounds.ratios[i]) ? std::string("exact") : fmt("%.4g", r->bounds.ratios[i])) << " | "
         << p.iterations << " |\n";
    }
    os << "\n";
    if (r->fit.exact) {
      os << "All errors vanish: the family coincides with its limit.\n\n";
    } else {
      os << "Fitted slope " << fmt("%.4f", r->fit.slope) << " (R^2 = " << fmt("%.4f", r->fit.r_squared)
         << "), predicted " << fmt("%.4f", r->fit.predicted) << ", verdict **" << to_string(r->fit.verdict) << "** (tolerance "
         << r->cfg.rate_tol << "). Predicted rates are upper-bound rates: `above` is consistent.\n\n";
    }
    os << "Bound check (" << to_string(r->cfg.bound_mode) << "): max err/bound " << fmt("%.4g", r->bounds.max_ratio)
       << ", largest growth towards small eps x" << fmt("%.3g", r->bounds.max_growth) << ", "
       << (r->bounds.within_band ? "within" : "outside") << " the x3 band.\n\n";
    if (!r->dt_trials.empty()) {
      os << "Time-step check:";
      for (const auto& t : r->dt_trials) {
        os << " dt = " << fmt("%.4g", t.dt);
        if (!t.failure.empty()) os << " (failed: " << t.failure << ");";
        else os << " (self-convergence " << fmt("%.3e", t.self_error) << " vs err " << fmt("%.3e", t.err_eps_max) << ");";
      }
      os << "\n\n";
    }
    for (const auto& w : r->warnings) os << "> warning: " << w << "\n\n";
  }
  return os.str();
}

void write_artifacts(const SweepResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "results.csv", results_csv(r));
  write_file(dir / "fit.json", fit_json(r).dump(2) + "\n");
  write_file(dir / "plot.gp", plot_script(r));
  write_file(dir / "report.md", report_markdown({&r}));
}

void emit_report(const std::vector<SweepResult>& runs, const std::filesystem::path& file) {
  std::vector<const SweepResult*> ptrs;
  for (const auto& r : runs) ptrs.push_back(&r);
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  write_file(file, report_markdown(ptrs));
}

}  // namespace wv::experiments
