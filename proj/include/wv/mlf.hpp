#pragma once

#include <string_view>

#include "wv/errors.hpp"

/// Generalized Mittag-Leffler function on the negative real axis and the
/// Abel kernel.
namespace wv::mlf {

enum class Regime { series, contour, asymptotic };
enum class RegimeChoice { automatic, series, contour, asymptotic };

std::string_view to_string(Regime r);
RegimeChoice parse_regime(std::string_view s);

/// Evaluate E_{a,b}(-x).
struct MLQuery {
  double a = 1.0;
  double b = 1.0;
  double x = 0.0;
};

struct MLResult {
  double value = 0.0;
  Regime regime = Regime::series;
  double est_abs_error = 0.0;
};

inline constexpr double kSeriesMaxX = 1.0;
inline constexpr double kAsymptoticMinX = 1e5;
inline constexpr int kAsymptoticTerms = 6;

/// Gamma function; throws DomainError at poles.
double gamma(double x);
/// 1/Gamma(x), zero at the poles of Gamma.
double rgamma(double x);

MLResult ml_eval(const MLQuery& q, RegimeChoice regime = RegimeChoice::automatic);

/// Shorthand for ml_eval(...).value.
double ml(double a, double b, double x);

/// t^b E_{a,b+1}(-(lambda t)^a), whose t-derivative is
/// t^{b-1} E_{a,b}(-(lambda t)^a).
double ml_antiderivative(double a, double b, double lambda_scale, double t);

/// Truncated large-x expansion; `terms` = 1 gives 1/(Gamma(b-a) x).
double ml_asymptotic(double a, double b, double x, int terms = 1);

struct AbelKernelSpec {
  double alpha = 1.0;
  double scale = 1.0;
};

/// scale * t^{alpha-1} / Gamma(alpha).
double abel_eval(const AbelKernelSpec& spec, double t);
/// Integral of abel_eval over [0, t].
double abel_integral(const AbelKernelSpec& spec, double t);

}  // namespace wv::mlf
