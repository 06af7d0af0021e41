#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "stab/kfun.hpp"

using namespace stab;

TEST_CASE("integrate: polynomial and empty interval") {
  CHECK(integrate([](double t) { return t; }, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(integrate([](double t) { return std::sin(t); }, 2.0, 2.0) == 0.0);
}

TEST_CASE("integrate: tau/(1+tau^2) against the log closed form") {
  const double v = integrate([](double t) { return t / (1.0 + t * t); }, 0.0, 1.0);
  CHECK(v == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-8));
}

TEST_CASE("invert: quadratic, identity, and the alpha4 building block") {
  CHECK(invert(MonotoneScalarFn::power(2.0), 4.0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(invert(MonotoneScalarFn::identity(), 0.3) == doctest::Approx(0.3).epsilon(1e-12));
  MonotoneScalarFn f([](double a) { return std::log(1.0 + a * a) / M_PI; });
  CHECK(invert(f, std::log(2.0) / M_PI) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("invert: unreachable target fails with OutOfRange") {
  // bounded above by 1, so y = 2 can never be bracketed
  MonotoneScalarFn f([](double s) { return s / (1.0 + s); });
  CHECK_THROWS_AS(invert(f, 2.0), Error);
}

TEST_CASE("make_alpha4: closed form with delta = identity") {
  Alpha4Options opt;
  opt.delta_override = MonotoneScalarFn::identity();
  const auto a4 = make_alpha4(MonotoneScalarFn::identity(), MonotoneScalarFn::identity(), opt);
  CHECK(a4(0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(a4(1.0) == doctest::Approx(std::log(2.0) / M_PI).epsilon(1e-6));
  CHECK(a4(0.5) == doctest::Approx(std::log(1.25) / M_PI).epsilon(1e-6));
  CHECK(a4(0.5) <= 0.5);
}

TEST_CASE("make_alpha4: default delta respects the min bound") {
  const auto alpha1 = MonotoneScalarFn::power(2.0);       // s^2
  const auto alpha3 = MonotoneScalarFn::power(1.0, 2.0);  // 2s
  const auto a4 = make_alpha4(alpha1, alpha3);
  for (double a : log_grid(1e-4, 1e2, 60)) {
    const double cap = std::min(a, alpha1(invert(alpha3, a)));
    CHECK(a4(a) <= cap * (1.0 + 1e-9));
  }
  // C1 at zero: forward difference quotient vanishes
  CHECK(a4(1e-6) / 1e-6 < 1e-3);
}

TEST_CASE("make_rho: closed forms") {
  const auto rho_id = make_rho(MonotoneScalarFn::identity());
  CHECK(rho_id(0.5) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(rho_id(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rho_id(0.0) == 0.0);

  const auto rho_sq = make_rho(MonotoneScalarFn::power(2.0));
  CHECK(rho_sq(0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-7));
  // rho'(0) = 0: one-sided quotient decreases toward 0
  CHECK(rho_sq(1e-3) / 1e-3 < rho_sq(1e-2) / 1e-2);
}

TEST_CASE("make_rho composed with make_alpha4 reproduces the identity chain") {
  Alpha4Options opt;
  opt.delta_override = MonotoneScalarFn::identity();
  const auto a4 = make_alpha4(MonotoneScalarFn::identity(), MonotoneScalarFn::identity(), opt);
  const auto rho = make_rho(a4);
  // rho(a) = exp(-int_a^1 1/a4) with a4 the arctan-kernel integral
  const double direct = std::exp(-integrate(
      [&](double t) { return 1.0 / a4(t); }, 0.5, 1.0));
  CHECK(rho(0.5) == doctest::Approx(direct).epsilon(1e-6));
}

TEST_CASE("make_gamma: L = 1 gives the sqrt(2s) branch") {
  const auto gamma = make_gamma([](double) { return 1.0; }, 10.0);
  CHECK(gamma(0.0) == 0.0);
  for (double s : {0.01, 0.1, 0.7, 2.0, 8.0})
    CHECK(gamma(s) == doctest::Approx(std::sqrt(2.0 * s)).epsilon(2e-2));
  // gamma(s)/gamma'(s) >= s at 0.7: the closed form gives 2s
  CHECK(gamma(0.7) / gamma.deriv(0.7) >= 0.7 * (1.0 - 1e-9));
}

TEST_CASE("make_gamma: slope property and inverse on the full grid") {
  const auto gamma = make_gamma([](double s) { return 1.5 / std::sqrt(s); }, 100.0);
  const auto grid = log_grid(1e-6, 50.0, 200);
  CHECK(gamma_slope_property_ok(gamma, grid));
  for (double s : log_grid(1e-4, 50.0, 24))
    CHECK(invert(gamma, gamma(s)) == doctest::Approx(s).epsilon(1e-8));
}

TEST_CASE("identity gamma override satisfies the slope property with equality") {
  CHECK(gamma_slope_property_ok(MonotoneScalarFn::identity(), log_grid(1e-6, 1e3, 100)));
}

TEST_CASE("monotone_envelope: lower stays below samples and increases") {
  const auto f = monotone_envelope({{1.0, 1.0}, {2.0, 4.0}, {3.0, 9.0}},
                                   EnvelopeSide::Lower);
  CHECK(f(2.0) <= 4.0);
  CHECK(f(1.5) < f(2.5));
  CHECK(f(0.5) < f(1.0));
}

TEST_CASE("monotone_envelope: running min monotonizes decreasing samples") {
  const auto f = monotone_envelope({{1.0, 5.0}, {2.0, 3.0}}, EnvelopeSide::Lower);
  CHECK(f(2.0) <= 3.0);
  CHECK(f(1.0) <= 3.0);
}

TEST_CASE("monotone_envelope: tight on sqrt samples") {
  std::vector<std::pair<double, double>> samples;
  for (double r : log_grid(0.1, 10.0, 40)) samples.emplace_back(r, std::sqrt(r));
  const auto f = monotone_envelope(samples, EnvelopeSide::Lower);
  CHECK(f(4.0) <= 2.0);
  CHECK(f(4.0) >= 2.0 - 1e-2);
}

TEST_CASE("monotone_envelope: all-nonpositive lower samples are degenerate") {
  CHECK_THROWS_AS(monotone_envelope({{1.0, -1.0}, {2.0, 0.0}}, EnvelopeSide::Lower),
                  Error);
}

TEST_CASE("constructed functions are strictly increasing on the wide grid") {
  const auto grid = log_grid(1e-6, 1e3, 1000);
  Alpha4Options opt;
  opt.delta_override = MonotoneScalarFn::identity();
  const auto a4 = make_alpha4(MonotoneScalarFn::identity(), MonotoneScalarFn::identity(), opt);
  CHECK(strictly_increasing_on(a4, grid));
  // rho underflows to exactly zero below a ~ 4e-3 for this alpha4, so start
  // the grid where the values are representable
  CHECK(strictly_increasing_on(make_rho(a4), log_grid(1e-2, 1e3, 1000)));
  CHECK(strictly_increasing_on(make_gamma([](double) { return 1.0; }, 10.0), grid));
}

TEST_CASE("class K-infinity members pass the doubling probe") {
  CHECK(exceeds_bound_by_doubling(MonotoneScalarFn::power(0.5), 1e6));
  CHECK(exceeds_bound_by_doubling(make_gamma([](double) { return 1.0; }, 10.0), 1e3));
}
