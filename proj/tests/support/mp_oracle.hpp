#pragma once

// Test-only arbitrary-precision reference values.
namespace oracle {

/// E_{a,b}(-x) by direct summation of the power series with enough working
/// digits to absorb the cancellation (at least 50 significant digits).
double ml_series(double a, double b, double x);

/// Working digits ml_series would use; grows like x^{1/a}.
unsigned series_digits(double a, double b, double x);

/// exp(x^2) erfc(x), which equals E_{1/2,1}(-x).
double erfcx(double x);

/// Gamma(x) at high precision, rounded to double.
double gamma(double x);

}  // namespace oracle
