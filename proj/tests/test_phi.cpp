#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "diffdist/phi.hpp"
#include "oracles.hpp"

#include <random>

using namespace diffdist;

TEST_CASE("phi vanishes for nonpositive arguments")
{
  const PhiParams<double> p(0.1, 2);
  for (double s : {-5.0, -1.0, -1e-12, 0.0}) {
    const auto v = phi_eval(s, p);
    CHECK(v.value == 0.0);
    CHECK(v.d1 == 0.0);
    CHECK(v.d2 == 0.0);
  }
}

TEST_CASE("phi closed form at s = 1")
{
  const PhiParams<double> p(0.1, 2);
  // Hand-integrated: s²/2 − s/9 + (1 − 2⁻⁸)/72 and s − 1/9 + 2⁻⁹/9.
  CHECK(phi(1.0, p) == doctest::Approx(0.5 - 1.0 / 9.0 + (1.0 - std::pow(2.0, -8)) / 72.0).epsilon(1e-13));
  CHECK(phi_d1(1.0, p) == doctest::Approx(1.0 - 1.0 / 9.0 + std::pow(2.0, -9) / 9.0).epsilon(1e-13));
  CHECK(std::abs(phi(1.0, p) - oracle::phi_double_integral(1.0, 0.1, 2)) < 1e-8);
  CHECK(std::abs(phi_d1(1.0, p) - oracle::phi_d1_integral(1.0, 0.1, 2)) < 1e-8);
  CHECK(phi(1.0, p) == doctest::Approx(0.402723524).epsilon(1e-8));

  const PhiParams<double> p3(0.1, 3);
  CHECK(phi_d2(1.0, p3) == doctest::Approx(std::pow(1.0 - std::pow(2.0, -10), 2)).epsilon(1e-14));
}

TEST_CASE("phi_d2 approaches one from below")
{
  const PhiParams<double> p(0.1, 2);
  CHECK(phi_d2(1e6, p) > 0.999);
  CHECK(phi_d2(1e6, p) <= 1.0);
  CHECK(phi_d2(1.0, p) < 1.0);
}

TEST_CASE("closed form matches the double integral")
{
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-2.0, 10.0);
  for (double h : {0.05, 0.1, 0.2}) {
    for (int k : {2, 3, 4}) {
      const PhiParams<double> p(h, k);
      double worst = 0;
      for (int i = 0; i < 100; ++i) {
        const double s = U(rng);
        worst = std::max(worst, std::abs(phi(s, p) - oracle::phi_double_integral(s, h, k)));
      }
      CAPTURE(h);
      CAPTURE(k);
      CHECK(worst < 1e-8);
    }
  }
}

TEST_CASE("quadrature fallback agrees with the closed form")
{
  const PhiParams<double> p(0.1, 4);
  for (double s : {0.01, 0.3, 2.0, 9.0}) {
    const auto a = phi_eval(s, p);
    const auto b = phi_by_quadrature(s, p);
    CHECK(std::abs(a.value - b.value) < 1e-10);
    CHECK(std::abs(a.d1 - b.d1) < 1e-10);
    CHECK(a.d2 == doctest::Approx(b.d2).epsilon(1e-14));
  }
}

TEST_CASE("large k stays accurate")
{
  const PhiParams<double> p(0.2, 8);
  for (double s : {1e-3, 0.05, 0.5, 4.0}) {
    CAPTURE(s);
    CHECK(std::abs(phi(s, p) - oracle::phi_double_integral(s, 0.2, 8)) < 1e-8);
  }
}

TEST_CASE("derivatives match central differences")
{
  const PhiParams<double> p(0.1, 2);
  const double s = 0.5, step = 1e-6;
  CHECK(std::abs((phi(s + step, p) - phi(s - step, p)) / (2 * step) - phi_d1(s, p)) < 1e-7);
  CHECK(std::abs((phi_d1(s + step, p) - phi_d1(s - step, p)) / (2 * step) - phi_d2(s, p)) < 1e-7);
}

TEST_CASE("parameter validation")
{
  CHECK_THROWS_AS(PhiParams<double>(0.5, 2), InvalidParams);
  CHECK_THROWS_AS(PhiParams<double>(1.0, 3), InvalidParams);
  CHECK_THROWS_AS(PhiParams<double>(0.0, 2), InvalidParams);
  CHECK_THROWS_AS(PhiParams<double>(-0.1, 2), InvalidParams);
  CHECK_THROWS_AS(PhiParams<double>(0.1, 1), InvalidParams);
  CHECK_NOTHROW(PhiParams<double>(0.1, 2));
}

TEST_CASE("validator passes on the standard configurations")
{
  for (auto [h, k] : {std::pair{0.1, 2}, std::pair{0.05, 3}, std::pair{0.2, 4}}) {
    const auto report = validate_basic_p2s(PhiParams<double>(h, k));
    for (const auto& c : report.checks) {
      CAPTURE(c.name);
      CAPTURE(c.worst);
      CHECK(c.passed);
    }
  }
}

TEST_CASE("monotone and nonnegative")
{
  const PhiParams<double> p(0.05, 3);
  double prev = 0, prev_d2 = 0;
  for (int i = 0; i <= 2000; ++i) {
    const double s = 10.0 * i / 2000.0;
    const auto v = phi_eval(s, p);
    CHECK(v.value >= prev);
    CHECK(v.d2 >= prev_d2);
    prev = v.value;
    prev_d2 = v.d2;
  }
}
