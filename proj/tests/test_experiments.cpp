#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wv/experiments.hpp"

using namespace wv::experiments;
using wv::kernels::KernelSpec;

namespace {
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("wv_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

SweepConfig tiny_abel_sweep() {
  SweepConfig c;
  c.base.kernel = KernelSpec::abel(0.5, 0.1, 1.0);
  c.base.k = 0.1;
  c.base.T = 0.25;
  c.base.dt = 0.25 / 128;
  c.base.n_modes = 8;
  c.base.data.preset = wv::solver::Preset::single_mode;
  c.base.data.amplitude = 0.05;
  c.eps_list = {1e-1, std::pow(10.0, -1.5), 1e-2, std::pow(10.0, -2.5)};
  c.auto_dt = false;
  c.jobs = 2;
  return c;
}
}  // namespace

TEST_CASE("fit_rate recovers an exact power law and classifies verdicts") {
  std::vector<std::pair<double, double>> pairs;
  for (double e : {1e-1, 1e-2, 1e-3}) pairs.push_back({e, 3.0 * std::pow(e, 0.7)});
  const RateFit f = fit_rate(pairs, 0.7, 0.15);
  CHECK(f.slope == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK(f.verdict == Verdict::match);
  CHECK(fit_rate(pairs, 0.5, 0.15).verdict == Verdict::above);
  CHECK(fit_rate(pairs, 0.9, 0.15).verdict == Verdict::below);
  CHECK(fit_rate(pairs, 0.85, 0.15).verdict == Verdict::match);
}

TEST_CASE("fit_rate: all-zero errors are exact, a single point is rejected") {
  const RateFit f = fit_rate({{1e-1, 0.0}, {1e-2, 0.0}}, 1.0, 0.15);
  CHECK(f.exact);
  CHECK(f.verdict == Verdict::match);
  CHECK_THROWS_AS(fit_rate({{1e-1, 1.0}}, 1.0, 0.15), wv::DomainError);
}

TEST_CASE("bound_check flags ratio growth towards small eps only") {
  std::vector<SweepPoint> pts{{1e-1, 1.0, 1.0}, {1e-2, 0.5, 0.4}, {1e-3, 0.2, 0.2}};
  BoundCheck b = bound_check(pts);
  CHECK(b.max_ratio == doctest::Approx(1.25));
  CHECK(b.within_band);
  // ratios falling is consistent with err <= C bound
  pts = {{1e-1, 1.0, 0.1}, {1e-2, 0.1, 0.1}};
  CHECK(bound_check(pts).within_band);
  pts = {{1e-1, 0.1, 1.0}, {1e-2, 0.05, 0.1}};
  b = bound_check(pts);
  CHECK(b.max_growth == doctest::Approx(5.0));
  CHECK_FALSE(b.within_band);
}

TEST_CASE("bound_check: zero kernel against itself is exact") {
  const BoundCheck b = bound_check({{1e-1, 0.0, 0.0}, {1e-2, 0.0, 0.0}});
  CHECK(b.exact);
  CHECK(std::isnan(b.ratios[0]));
  CHECK(b.within_band);
}

TEST_CASE("bound quantity for ML a <= b matches the closed form") {
  // (K_eps - K_0)*1 = -T^{1+b-a}-type Mittag-Leffler tail, checked against the norm helper
  const KernelSpec k = KernelSpec::mittag_leffler(0.5, 0.75, 1e-2, 1.0);
  const double b = bound_quantity(k, 0.5, BoundMode::sqrt_conv1);
  CHECK(b * b == doctest::Approx(wv::kernels::diff_conv_one_l1(k, 0.5)));
  CHECK(bound_quantity(KernelSpec::zero(), 0.5, BoundMode::tv) == 0.0);
}

TEST_CASE("kernel-only slopes hit the asymptotic exponents") {
  const auto grid = kernel_only_eps_grid();
  auto r = kernel_only_sweep(KernelSpec::mittag_leffler(0.5, 0.75, 1e-3, 1.0), grid, 1.0);
  REQUIRE(r.diff_conv1);
  CHECK(std::abs(r.diff_conv1->slope - 0.5) <= 0.05);
  CHECK_FALSE(r.conv1);
  r = kernel_only_sweep(KernelSpec::mittag_leffler(0.6, 0.6, 1e-3, 1.0), grid, 1.0);
  CHECK(std::abs(r.diff_conv1->slope - 0.6) <= 0.05);
  r = kernel_only_sweep(KernelSpec::mittag_leffler_fixed_ratio(0.8, 0.4, 1e-3, 1.0), grid, 1.0);
  REQUIRE(r.conv1);
  CHECK(std::abs(r.conv1->slope - 0.4) <= 0.05);
  CHECK(r.conv1->verdict == Verdict::match);
  // a = b = 1 is the exponential relaxation kernel
  r = kernel_only_sweep(KernelSpec::mittag_leffler(1.0, 1.0, 1e-3, 1.0), grid, 1.0);
  CHECK(std::abs(r.diff_conv1->slope - 1.0) <= 0.05);
}

TEST_CASE("TOML and JSON configs parse to the same sweep") {
  const std::string toml_text = R"(
name = "abel_demo"
eps = [0.1, 0.0316227766, 0.01, 0.00316227766]
bound = "tv"
rate_tol = 0.2
[pde]
kernel = "abel:alpha=0.5,tau=1"
k = 0.1
T = 0.5
n_steps = 64
n_modes = 8
[pde.data]
preset = "single-mode"
amplitude = 0.05
)";
  const std::string json_text = R"({"name": "abel_demo", "eps": [0.1, 0.0316227766, 0.01, 0.00316227766],
    "bound": "tv", "rate_tol": 0.2,
    "pde": {"kernel": {"family": "abel", "alpha": 0.5, "tau": 1}, "k": 0.1, "T": 0.5, "n_steps": 64, "n_modes": 8,
            "data": {"preset": "single-mode", "amplitude": 0.05}}})";
  const SweepConfig a = sweep_config_from_json(toml_to_json(toml_text));
  const SweepConfig b = sweep_config_from_json(nlohmann::json::parse(json_text));
  CHECK(a.label() == "abel_demo");
  CHECK(a.base.kernel == b.base.kernel);
  CHECK(a.base.kernel == KernelSpec::abel(0.5, 0.1, 1.0));
  CHECK(a.eps_list == b.eps_list);
  CHECK(a.bound_mode == BoundMode::tv);
  CHECK(a.base.dt == doctest::Approx(0.5 / 64));
  CHECK(a.base.data.preset == wv::solver::Preset::single_mode);
  CHECK(b.rate_tol == 0.2);
}

TEST_CASE("config errors are reported") {
  CHECK_THROWS_AS(toml_to_json("pde = [unclosed"), wv::DomainError);
  CHECK_THROWS_AS(sweep_config_from_json(nlohmann::json::parse(R"({"eps": [0.1, 0.01]})")), wv::DomainError);
  // ML with a > b only has a limit at fixed ratio
  CHECK_THROWS(sweep_config_from_json(nlohmann::json::parse(R"({"pde": {"kernel": "ml:a=0.8,b=0.4,tau=1"}})")));
  CHECK_THROWS_AS(sweep_config_from_json(nlohmann::json::parse(R"({"eps": [0.01, 0.1], "pde": {"kernel": "abel:alpha=0.5"}})")),
                  wv::DomainError);
}

TEST_CASE("labels follow the family parameters") {
  SweepConfig c;
  c.base.kernel = KernelSpec::mittag_leffler(0.5, 0.75, 0.1, 1.0);
  CHECK(c.label() == "ml_0.5_0.75");
  c.base.kernel = KernelSpec::mittag_leffler_fixed_ratio(0.8, 0.4, 0.1, 1.0);
  CHECK(c.label() == "ml_0.8_0.4_rho1");
  c.base.kernel = KernelSpec::abel(0.5, 0.1, 1.0);
  CHECK(c.label() == "abel_0.5");
}

TEST_CASE("small Abel sweep: decreasing errors, artifacts, byte-identical rerun") {
  SweepConfig c = tiny_abel_sweep();
  c.output_dir = scratch("sweep");
  const SweepResult r1 = run_sweep(c);
  REQUIRE(r1.points.size() == 4);
  for (std::size_t i = 1; i < r1.points.size(); ++i) CHECK(r1.points[i].err < r1.points[i - 1].err);
  CHECK(r1.fit.slope > 0.85);
  CHECK(r1.fit.verdict != Verdict::below);
  CHECK(r1.bounds.within_band);
  // short grid: a span warning, no time-step trials beyond the base one
  CHECK_FALSE(r1.warnings.empty());
  CHECK(r1.dir == c.output_dir / "abel_0.5");
  for (const char* f : {"results.csv", "fit.json", "plot.gp", "report.md"}) CHECK(std::filesystem::exists(r1.dir / f));
  const std::string csv1 = slurp(r1.dir / "results.csv");
  CHECK(csv1.rfind("eps,err_E,bound,log10_eps,log10_err\n", 0) == 0);

  c.jobs = 1;
  const SweepResult r2 = run_sweep(c);
  CHECK(slurp(r2.dir / "results.csv") == csv1);

  const auto fit = nlohmann::json::parse(slurp(r1.dir / "fit.json"));
  for (const char* key : {"slope", "intercept", "r_squared", "predicted", "verdict"}) CHECK(fit.contains(key));
  const std::string report = slurp(r1.dir / "report.md");
  CHECK(report.find("Fitted slope") != std::string::npos);
  CHECK(report.find("verdict **") != std::string::npos);
  CHECK(report.find("limit is the inviscid equation") != std::string::npos);
  std::filesystem::remove_all(c.output_dir);
}

TEST_CASE("zero kernel sweeps against itself exactly") {
  SweepConfig c = tiny_abel_sweep();
  c.base.kernel = KernelSpec::zero();
  c.predicted = 1.0;
  const SweepResult r = run_sweep(c);
  CHECK(r.fit.exact);
  CHECK(r.bounds.exact);
  CHECK(report_markdown({&r}).find("exact") != std::string::npos);
}

TEST_CASE("auto time step halves until the self-convergence check holds") {
  SweepConfig c = tiny_abel_sweep();
  c.base.dt = 0.25 / 16;
  c.auto_dt = true;
  c.max_dt_halvings = 4;
  const SweepResult r = run_sweep(c);
  REQUIRE_FALSE(r.dt_trials.empty());
  const DtTrial& last = r.dt_trials.back();
  CHECK(r.dt == last.dt);
  CHECK(r.dt <= c.base.dt);
  if (r.dt_trials.size() <= static_cast<std::size_t>(c.max_dt_halvings)) CHECK(last.self_error < 0.1 * last.err_eps_max);
}

TEST_CASE("reports: empty set and stable ordering") {
  CHECK(report_markdown({}).find("No runs.") != std::string::npos);
  SweepConfig c = tiny_abel_sweep();
  c.eps_list = {1e-1, 1e-2};
  SweepResult a = run_sweep(c);
  SweepResult b = a;
  b.cfg.name = "aaa";
  const std::string rep = report_markdown({&a, &b});
  const auto pa = rep.find("## aaa"), pb = rep.find("## abel_0.5");
  REQUIRE(pa != std::string::npos);
  REQUIRE(pb != std::string::npos);
  CHECK(pa < pb);
  CHECK(report_markdown({&b, &a}) == rep);
  const auto file = scratch("report") / "report.md";
  emit_report({a, b}, file);
  CHECK(std::filesystem::file_size(file) == rep.size());
  std::filesystem::remove_all(file.parent_path());
}
