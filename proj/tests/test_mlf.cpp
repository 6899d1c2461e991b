#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "support/mp_oracle.hpp"
#include "wv/mlf.hpp"

using namespace wv::mlf;

namespace {
std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = std::pow(10.0, std::log10(lo) + (std::log10(hi) - std::log10(lo)) * i / (n - 1));
  return v;
}
}  // namespace

TEST_CASE("E_{a,b}(0) is 1/Gamma(b)") {
  CHECK(ml(1.0, 1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ml(0.5, 2.5, 0.0) == doctest::Approx(1.0 / std::tgamma(2.5)).epsilon(1e-15));
}

TEST_CASE("E_{1,1}(-1) is exp(-1)") {
  CHECK(std::abs(ml(1.0, 1.0, 1.0) - 0.36787944117144233) < 1e-14);
}

TEST_CASE("E_{1/2,1}(-2) is exp(4) erfc(2)") {
  // frozen from the 60-digit series oracle
  const double frozen = 0.25539567631050574;
  CHECK(std::abs(oracle::ml_series(0.5, 1.0, 2.0) - frozen) < 1e-16);
  CHECK(std::abs(ml(0.5, 1.0, 2.0) - frozen) < 1e-12);
}

TEST_CASE("E_{1,1}(-x) matches exp(-x) on [0,50]") {
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = 50.0 * i / 999.0;
    worst = std::max(worst, std::abs(ml(1.0, 1.0, x) - std::exp(-x)));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("E_{1/2,1}(-x) matches exp(x^2) erfc(x) on [0,10]") {
  double worst = 0.0;
  for (int i = 0; i < 400; ++i) {
    const double x = 10.0 * i / 399.0;
    worst = std::max(worst, std::abs(ml(0.5, 1.0, x) - oracle::erfcx(x)));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("agreement with the high-precision series oracle") {
  for (double a : {0.3, 0.5, 0.7, 0.9, 1.0}) {
    for (double b : {0.3, 0.8, 1.0, 1.7, 2.5, 4.0}) {
      for (double x : {0.0, 0.1, 0.5, 1.0, 1.5, 3.0, 7.0, 15.0, 30.0}) {
        CAPTURE(a);
        CAPTURE(b);
        CAPTURE(x);
        if (oracle::series_digits(a, b, x) > 250) continue;
        const MLResult r = ml_eval({a, b, x});
        const double ref = oracle::ml_series(a, b, x);
        CHECK(r.est_abs_error <= 1e-10);
        CHECK(std::abs(r.value - ref) <= 1e-10);
      }
    }
  }
}

TEST_CASE("adjacent regimes agree at the switch points") {
  for (double a : {0.3, 0.5, 0.75, 1.0}) {
    for (double b : {0.25, 0.75, 1.0, 1.5, 2.75, 4.0}) {
      CAPTURE(a);
      CAPTURE(b);
      const double s = ml_eval({a, b, kSeriesMaxX}, RegimeChoice::series).value;
      const double c = ml_eval({a, b, kSeriesMaxX}, RegimeChoice::contour).value;
      CHECK(std::abs(s - c) <= 1e-9);
      const double c2 = ml_eval({a, b, kAsymptoticMinX}, RegimeChoice::contour).value;
      const double as = ml_eval({a, b, kAsymptoticMinX}, RegimeChoice::asymptotic).value;
      CHECK(std::abs(c2 - as) <= 1e-9);
    }
  }
}

TEST_CASE("regime selection and error estimate across the range") {
  CHECK(ml_eval({0.5, 1.0, 0.5}).regime == Regime::series);
  CHECK(ml_eval({0.5, 1.0, 50.0}).regime == Regime::contour);
  CHECK(ml_eval({0.5, 1.0, 1e6}).regime == Regime::asymptotic);
  for (double a : {0.1, 0.5, 1.0})
    for (double b : {0.05, 1.0, 4.0})
      for (double x : logspace(1e-3, 1e8, 23)) CHECK(ml_eval({a, b, x}).est_abs_error <= 1e-10);
}

TEST_CASE("completely monotone for b >= a") {
  for (double a : {0.3, 0.6, 1.0}) {
    for (double b : {a, a + 0.4, 2.0}) {
      double prev = ml(a, b, 0.0);
      for (double x : logspace(1e-4, 1e6, 300)) {
        const double v = ml(a, b, x);
        CHECK(v >= 0.0);
        CHECK(v <= prev + 1e-12);
        prev = v;
      }
    }
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(ml_eval({0.0, 1.0, 1.0}), wv::DomainError);
  CHECK_THROWS_AS(ml_eval({1.5, 1.0, 1.0}), wv::DomainError);
  CHECK_THROWS_AS(ml_eval({0.5, 1.0, -1.0}), wv::DomainError);
  CHECK_THROWS_AS(ml_eval({0.5, std::nan(""), 1.0}), wv::DomainError);
}

TEST_CASE("gamma helpers") {
  for (double x : {0.1, 0.5, 1.5, 3.7, 10.25, -0.5, -2.5})
    CHECK(wv::mlf::gamma(x) == doctest::Approx(oracle::gamma(x)).epsilon(1e-14));
  CHECK_THROWS_AS(wv::mlf::gamma(0.0), wv::DomainError);
  CHECK_THROWS_AS(wv::mlf::gamma(-3.0), wv::DomainError);
  CHECK(rgamma(0.0) == 0.0);
  CHECK(rgamma(-2.0) == 0.0);
  CHECK(rgamma(-2.5) == doctest::Approx(1.0 / oracle::gamma(-2.5)).epsilon(1e-14));
  CHECK(rgamma(200.0) == doctest::Approx(std::exp(-std::lgamma(200.0))).epsilon(1e-12));
}

TEST_CASE("antiderivative vanishes at the origin") { CHECK(ml_antiderivative(1.0, 1.0, 1.0, 0.0) == 0.0); }

TEST_CASE("antiderivative of the exponential") {
  for (double t : {0.01, 0.3, 1.0, 4.0, 20.0}) {
    const double quad = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [](double s) { return std::exp(-s); }, 0.0, t);
    CHECK(std::abs(ml_antiderivative(1.0, 1.0, 1.0, t) - quad) < 1e-13);
    CHECK(std::abs(ml_antiderivative(1.0, 1.0, 1.0, t) - (1.0 - std::exp(-t))) < 1e-13);
  }
}

TEST_CASE("antiderivative derivative at t=0.7 for (0.6, 0.8)") {
  const double t = 0.7, h = 1e-5;
  const double fd = (ml_antiderivative(0.6, 0.8, 1.0, t + h) - ml_antiderivative(0.6, 0.8, 1.0, t - h)) / (2 * h);
  const double kernel = std::pow(t, -0.2) * ml(0.6, 0.8, std::pow(t, 0.6));
  CHECK(std::abs(fd - kernel) < 1e-6);
}

TEST_CASE("antiderivative identity over the (a,b) grid") {
  for (double a : {0.3, 0.5, 0.7, 1.0}) {
    for (double b : {0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5}) {
      for (double lam : {1.0, 10.0}) {
        for (double t : logspace(1e-6, 1e3, 37)) {
          CAPTURE(a);
          CAPTURE(b);
          CAPTURE(t);
          const double h = 1e-4 * t;
          const double fd =
              (ml_antiderivative(a, b, lam, t + h) - ml_antiderivative(a, b, lam, t - h)) / (2 * h);
          const double kernel = std::pow(t, b - 1.0) * ml(a, b, std::pow(lam * t, a));
          CHECK(std::abs(fd - kernel) <= 1e-5 * std::abs(kernel) + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("leading-order asymptotics") {
  CHECK(ml_asymptotic(0.5, 1.0, 1e6) == doctest::Approx(1.0 / (std::sqrt(std::numbers::pi) * 1e6)).epsilon(1e-14));
  CHECK(ml_asymptotic(1.0, 2.0, 1e7) == doctest::Approx(1e-7).epsilon(1e-14));
  CHECK(std::abs(ml(1.0, 2.0, 1e7) * 1e7 - 1.0) < 1e-6);
  const double c = ml_eval({0.7, 0.9, 1e4}, RegimeChoice::contour).value;
  CHECK(std::abs(ml_asymptotic(0.7, 0.9, 1e4) - c) / std::abs(c) < 1e-3);
  CHECK_THROWS_AS(ml_asymptotic(0.5, 1.0, 0.5), wv::DomainError);
  CHECK_THROWS_AS(ml_asymptotic(0.5, 0.5, 1e6), wv::DomainError);
}

TEST_CASE("Abel kernel") {
  CHECK(abel_eval({1.0, 1.0}, 5.0) == 1.0);
  CHECK(abel_eval({0.5, 1.0}, 1.0) == doctest::Approx(0.5641895835477563).epsilon(1e-15));
  CHECK_THROWS_AS(abel_eval({0.5, 1.0}, 0.0), wv::SingularityError);
  const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [](double s) { return s > 0 ? abel_eval({0.5, 1.0}, s * s) * 2 * s : 2.0 / std::sqrt(std::numbers::pi); }, 0.0,
      1.0);
  CHECK(std::abs(q - 2.0 / std::sqrt(std::numbers::pi)) < 1e-13);
  CHECK(std::abs(abel_integral({0.5, 1.0}, 1.0) - 2.0 / std::sqrt(std::numbers::pi)) < 1e-15);
  double prev = abel_eval({0.3, 2.0}, 1e-3);
  for (double t : logspace(2e-3, 1e3, 50)) {
    const double v = abel_eval({0.3, 2.0}, t);
    CHECK(v < prev);
    prev = v;
  }
}
