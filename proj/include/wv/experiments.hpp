#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wv/kernel_io.hpp"
#include "wv/kernels.hpp"
#include "wv/solver.hpp"

/// epsilon sweeps towards the singular limit: solve the family, measure the
/// energy-norm distance to the limit solution, fit log-log slopes and write
/// artifacts.
namespace wv::experiments {

using kernels::KernelSpec;

enum class BoundMode { sqrt_conv1, tv };
enum class Verdict { match, above, below };
std::string_view to_string(BoundMode m);
std::string_view to_string(Verdict v);
BoundMode parse_bound_mode(std::string_view s);

/// Default grid 10^-1, 10^-1.5, ..., 10^-3.
std::vector<double> default_eps_grid();
/// Grid for the closed-form kernel quantities, 10^-3 ... 10^-5: two decades
/// further in, where the next asymptotic term no longer bends the slope.
std::vector<double> kernel_only_eps_grid();

struct SweepConfig {
  std::string name;                 // empty: derived from the kernel
  solver::PDEConfig base;           // base.kernel is the family template
  std::vector<double> eps_list = default_eps_grid();
  std::optional<KernelSpec> limit;  // empty: limit_kernel of the family
  BoundMode bound_mode = BoundMode::sqrt_conv1;
  std::filesystem::path output_dir; // empty: no files
  double rate_tol = 0.15;
  std::optional<double> predicted;  // empty: predicted_rate of the family
  bool auto_dt = true;
  int max_dt_halvings = 4;
  bool timestamp = false;           // append a UTC stamp to the output folder
  int jobs = 0;                     // 0: hardware concurrency

  /// Hard errors only; a short eps span is reported as a warning.
  void validate() const;
  std::string label() const;
};

/// PDEConfig fields (c, k, L, T, dt or n_steps, n_modes, fp_tol, fp_max_iters,
/// relaxation, kernel, data.{preset, amplitude, mode, center, width}).
solver::PDEConfig pde_config_from_json(const nlohmann::json& j);
/// TOML when the extension is .toml, JSON otherwise.
nlohmann::json load_config_file(const std::filesystem::path& path);
SweepConfig sweep_config_from_json(const nlohmann::json& j);
/// TOML (.toml) or JSON (anything else).
SweepConfig load_sweep_config(const std::filesystem::path& path);
/// TOML text to the equivalent JSON document.
nlohmann::json toml_to_json(std::string_view toml_text);

struct RateFit {
  std::vector<std::pair<double, double>> pairs;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double predicted = 0.0;
  Verdict verdict = Verdict::below;
  bool exact = false;  // every error is zero
};

/// Least squares on (log eps, log value); verdict match iff |slope - predicted| <= tol.
RateFit fit_rate(const std::vector<std::pair<double, double>>& pairs, double predicted, double tol);

struct SweepPoint {
  double eps = 0.0;
  double err = 0.0;
  double bound = 0.0;
  int iterations = 0;
  bool ball_ok = true;
};

struct BoundCheck {
  std::vector<double> ratios;  // err / bound, NaN when both vanish
  double max_ratio = 0.0;
  double max_growth = 1.0;     // largest ratio(eps_j) / ratio(eps_i) with eps_j < eps_i
  bool within_band = true;     // max_growth <= 3
  bool exact = false;          // bound == err == 0 everywhere
};

BoundCheck bound_check(const std::vector<SweepPoint>& points);

struct DtTrial {
  double dt = 0.0;
  double self_error = 0.0;
  double err_eps_max = 0.0;
  std::string failure;
};

struct SweepResult {
  SweepConfig cfg;
  KernelSpec limit;
  std::vector<SweepPoint> points;
  RateFit fit;
  BoundCheck bounds;
  double dt = 0.0;
  std::vector<DtTrial> dt_trials;
  std::vector<std::string> warnings;
  std::filesystem::path dir;  // where artifacts went, if any
};

/// Raised when some eps points could not be solved.
class SweepAborted : public std::runtime_error {
 public:
  SweepAborted(const std::string& what, std::vector<double> failed)
      : std::runtime_error(what), failed_(std::move(failed)) {}
  const std::vector<double>& failed() const noexcept { return failed_; }

 private:
  std::vector<double> failed_;
};

/// Bound quantity for one kernel: |(K_eps - K_0)*1|_{L1}^{1/2} or the total variation difference.
double bound_quantity(const KernelSpec& k, double T, BoundMode mode);

SweepResult run_sweep(const SweepConfig& cfg);

struct KernelOnlyResult {
  std::optional<RateFit> diff_conv1;  // |(K_eps - K_0)*1|_{L1}
  std::optional<RateFit> conv1;       // |K_eps*1|_{L1}, for a > b
};

KernelOnlyResult kernel_only_sweep(const KernelSpec& family, const std::vector<double>& eps_list, double T,
                                   double tol = 0.05);

/// results.csv, fit.json, plot.gp and report.md into `dir`.
void write_artifacts(const SweepResult& r, const std::filesystem::path& dir);
std::string results_csv(const SweepResult& r);
nlohmann::json fit_json(const SweepResult& r);
std::string plot_script(const SweepResult& r);
/// Markdown for a set of sweeps, ordered by label.
std::string report_markdown(std::vector<const SweepResult*> runs);
void emit_report(const std::vector<SweepResult>& runs, const std::filesystem::path& file);

}  // namespace wv::experiments
