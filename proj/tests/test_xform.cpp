#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "stab/sampling.hpp"
#include "stab/xform.hpp"

using namespace stab;

namespace {

LyapunovCertificate norm_sq(std::size_t dim) {
  LyapunovCertificate cert;
  cert.dim = dim;
  cert.V = [](const Vec& x) { return dot(x, x); };
  cert.grad_V = [](const Vec& x) { return scaled(x, 2.0); };
  cert.bounds = LyapunovCertificate::Bounds{MonotoneScalarFn::power(2.0),
                                            MonotoneScalarFn::power(2.0)};
  return cert;
}

}  // namespace

TEST_CASE("build_change: 1-D quadratic V with identity gamma gives T(x) = sign(x) x^2") {
  const auto change = build_change(norm_sq(1), MonotoneScalarFn::identity(), 1.0);
  CHECK(change.forward({2.0})[0] == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(change.forward({-0.5})[0] == doctest::Approx(-0.25).epsilon(1e-9));
  CHECK(change.inverse({4.0})[0] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("build_change: R^2 with gamma = sqrt(2s)") {
  const auto gamma = MonotoneScalarFn::power(0.5, std::sqrt(2.0));
  const auto change = build_change(norm_sq(2), gamma, 1.0);
  // gamma^{-1}(s) = s^2/2, so T(1, 0) = (0.5, 0)
  const Vec y = change.forward({1.0, 0.0});
  CHECK(y[0] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(y[1] == doctest::Approx(0.0).epsilon(1e-10));
  const Vec x = change.inverse({0.5, 0.0});
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("build_change: gamma violating the slope property is rejected") {
  CHECK_THROWS_AS(build_change(norm_sq(1), MonotoneScalarFn::power(2.0), 1.0), Error);
}

TEST_CASE("pushforward: closed forms") {
  const auto change1 = build_change(norm_sq(1), MonotoneScalarFn::identity(), 1.0);
  const auto& half = catalog("halfspeed_1d");
  const auto tsys = pushforward(half.system, change1);
  CHECK(tsys.rhs({1.0}, {})[0] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(tsys.rhs({9.0}, {})[0] == doctest::Approx(-9.0).epsilon(1e-6));

  DisturbedSystem zero;
  zero.dim_x = 1;
  zero.dim_d = 0;
  zero.rhs = [](const Vec&, const Vec&) { return Vec{0.0}; };
  const auto tz = pushforward(zero, change1);
  CHECK(tz.rhs({2.0}, {})[0] == 0.0);

  const auto gamma = MonotoneScalarFn::power(0.5, std::sqrt(2.0));
  const auto change2 = build_change(norm_sq(2), gamma, 1.0);
  const auto& lin = catalog("linear_2d");
  // ||y|| = ||x||^4 / 2 and d||x||/dt = -||x||, so f~(y) = -4y
  const auto t2 = pushforward(lin.system, change2);
  const Vec f = t2.rhs({0.5, 0.0}, {});
  CHECK(f[0] == doctest::Approx(-2.0).epsilon(1e-6));
  CHECK(f[1] == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("round trip and normalization on every catalog certificate") {
  for (const auto& e : catalog()) {
    const auto change = build_change(e.cert, MonotoneScalarFn::identity(), 1.0);
    LowDiscrepancySeq seq(e.cert.dim + 1);
    for (int k = 0; k < 200; ++k) {
      const Vec u = seq.next();
      Vec x = sphere_from_unit(u.data(), e.cert.dim);
      x = scaled(x, 1e-3 * std::pow(1e4, u[e.cert.dim]));
      const Vec y = change.forward(x);
      CHECK(norm(sub(change.inverse(y), x)) <= 1e-6 * (1.0 + norm(x)));
      CHECK(std::abs(e.cert.V(change.inverse(y)) - change.gamma(norm(y)))
            <= 1e-6 * (1.0 + change.gamma(norm(y))));
    }
  }
}

TEST_CASE("jacobian: finite differences agree with the product-rule formula") {
  const auto gamma = MonotoneScalarFn::power(0.5, std::sqrt(2.0));
  const auto cert = norm_sq(2);
  const auto change = build_change(cert, gamma, 1.0);
  for (const Vec x : {Vec{0.8, 0.3}, Vec{-1.5, 2.0}, Vec{0.05, -0.02}}) {
    const Mat fd = change.jacobian(x);
    const Mat an = analytic_change_jacobian(cert, gamma, 1.0, x);
    double rel = 0.0;
    for (std::size_t i = 0; i < fd.rows; ++i)
      for (std::size_t j = 0; j < fd.cols; ++j)
        rel = std::max(rel, std::abs(fd(i, j) - an(i, j)));
    CHECK(rel <= 1e-4 * (1.0 + operator_norm(an)));
  }
}

TEST_CASE("DT-norm decays monotonically toward the origin for constructed gamma") {
  const auto cert = norm_sq(2);
  auto L = [&](double s) { return estimate_L(cert, 1.0, s, 8); };
  const auto gamma = make_gamma(L, 1e3);
  const auto change = build_change(cert, gamma, 1.0);
  double prev = HUGE_VAL;
  for (int k = 4; k <= 20; ++k) {
    const double r = std::pow(2.0, -k);
    const double cur = operator_norm(change.jacobian({r, 0.0}));
    CHECK(cur <= prev * (1.0 + 1e-9));
    prev = cur;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("commutation: T(phi(t, x, d)) = phi~(t, T(x), d) for piecewise-constant d") {
  const auto& e = catalog("iss_scalar");
  const auto change = build_change(e.cert, MonotoneScalarFn::identity(), 1.0);
  const auto tsys = pushforward(e.system, change);
  const auto sig = make_disturbance({1, 0.3, 0.5}, 2.0, 11);
  const Vec x0{1.7};
  const auto base = simulate(e.system, x0, sig, 2.0, 1e-10);
  const auto lifted = simulate(tsys.as_system(), change.forward(x0), sig, 2.0, 1e-10);
  for (std::size_t k = 0; k < base.times.size(); k += 20) {
    const Vec expect = change.forward(base.states[k]);
    CHECK(norm(sub(lifted.states[k], expect)) <= 1e-5 * (1.0 + norm(expect)));
  }
}

TEST_CASE("flow_based_normal_form: linear systems collapse to dy/dt = -y") {
  const auto& half = catalog("halfspeed_1d");
  auto [ch1, ts1] = flow_based_normal_form(half.system, half.cert);
  CHECK(ch1.forward({2.0})[0] == doctest::Approx(4.0).epsilon(1e-7));
  CHECK(ch1.forward({0.5})[0] == doctest::Approx(0.25).epsilon(1e-7));
  CHECK(ch1.inverse({0.25})[0] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(ts1.rhs({3.0}, {})[0] == doctest::Approx(-3.0).epsilon(1e-6));

  const auto& lin = catalog("linear_2d");
  auto [ch2, ts2] = flow_based_normal_form(lin.system, lin.cert);
  for (const auto& u : sphere_points(2, 10)) {
    const Vec y = scaled(u, 0.8);
    const Vec f = ts2.rhs(y, {});
    CHECK(norm(add(f, y)) <= 1e-5 * norm(y));
  }
}

TEST_CASE("flow_based_normal_form: bounded-image dynamics are rejected") {
  const auto& cubic = catalog("cubic_1d");
  CHECK_THROWS_AS(flow_based_normal_form(cubic.system, cubic.cert), Error);
}

TEST_CASE("input_change: override formula, radial structure, inverse") {
  const auto& e = catalog("iss_scalar");
  InputChangeOptions opt;
  opt.alpha_tilde_override = MonotoneScalarFn::identity();
  const auto ic = input_change(e.system, MonotoneScalarFn::power(1.0, 2.0), opt);
  CHECK(ic.forward({2.0})[0] == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(ic.forward({0.0})[0] == 0.0);
  CHECK(ic.inverse(ic.forward({0.7}))[0] == doctest::Approx(0.7).epsilon(1e-8));

  // sampled construction: R radial, increasing, invertible
  const auto ic2 = input_change(e.system, MonotoneScalarFn::power(1.0, 2.0));
  double prev = 0.0;
  for (double r : {0.1, 0.3, 0.8, 1.0}) {
    const double nr = norm(ic2.forward({r}));
    CHECK(nr > prev);
    prev = nr;
    CHECK(std::abs(ic2.inverse(ic2.forward({r}))[0] - r) <= 1e-8 * (1.0 + r));
  }
  // alpha~(1)^4 >= 2 sup <f, x> + alpha(1)^2, and the sampled sup is r^2/4
  CHECK(ic2.alpha_tilde(1.0) >= 0.25);
}
