#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "stab/lyap.hpp"
#include "stab/sampling.hpp"

using namespace stab;

namespace {

LyapunovCertificate norm_sq(std::size_t dim) {
  LyapunovCertificate cert;
  cert.dim = dim;
  cert.V = [](const Vec& x) { return dot(x, x); };
  cert.grad_V = [](const Vec& x) { return scaled(x, 2.0); };
  return cert;
}

}  // namespace

TEST_CASE("check_certificate: quadratic norm passes everything") {
  CHECK(check_certificate(norm_sq(2)).pass());
}

TEST_CASE("check_certificate: V = x1^2 in R^2 fails properness along x2") {
  LyapunovCertificate cert;
  cert.dim = 2;
  cert.V = [](const Vec& x) { return x[0] * x[0]; };
  const auto diag = check_certificate(cert);
  CHECK_FALSE(diag.pass());
  bool proper_failed = false;
  for (const auto& item : diag.items)
    if (item.name == "proper" && !item.pass) proper_failed = true;
  CHECK(proper_failed);
}

TEST_CASE("check_certificate: flat-at-zero exponential V stays definite") {
  LyapunovCertificate cert;
  cert.dim = 1;
  // flat enough to stress the check, but representable down to r_min = 1e-3
  cert.V = [](const Vec& x) {
    return x[0] == 0.0 ? 0.0 : std::exp(-1.0 / std::sqrt(std::abs(x[0])));
  };
  const auto diag = check_certificate(cert);
  for (const auto& item : diag.items) {
    if (item.name == "positive_definite") CHECK(item.pass);
    if (item.name == "gradient_nonvanishing") CHECK(item.pass);
  }
}

TEST_CASE("grad_flow: radial closed form, identity, backward") {
  const auto cert = norm_sq(2);
  Vec y = grad_flow(cert, {1.0, 0.0}, 3.0);
  CHECK(y[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(y[1] == doctest::Approx(0.0).epsilon(1e-9));

  y = grad_flow(cert, {0.3, -0.4}, 0.0);
  CHECK(y[0] == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(y[1] == doctest::Approx(-0.4).epsilon(1e-10));

  y = grad_flow(cert, {2.0, 0.0}, -3.0);
  CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("grad_flow: level transport and composition") {
  const auto cert = norm_sq(2);
  const Vec x0{0.7, -1.1};
  for (double t : {-1.0, 0.3, 4.0}) {
    const Vec y = grad_flow(cert, x0, t);
    CHECK(cert.V(y) == doctest::Approx(cert.V(x0) + t).epsilon(1e-7));
  }
  const Vec one = grad_flow(cert, grad_flow(cert, x0, 1.3), 0.9);
  const Vec two = grad_flow(cert, x0, 2.2);
  CHECK(norm(sub(one, two)) <= 2e-8 * (1.0 + norm(two)));
}

TEST_CASE("grad_flow: guards") {
  const auto cert = norm_sq(1);
  CHECK_THROWS_AS(grad_flow(cert, {0.0}, 1.0), Error);
  CHECK_THROWS_AS(grad_flow(cert, {1.0}, -1.0), Error);  // target level 0 < v_min
}

TEST_CASE("project_to_level: radial normalization and sign preservation") {
  Vec p = project_to_level(norm_sq(2), {3.0, 4.0}, 1.0);
  CHECK(p[0] == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(0.8).epsilon(1e-6));

  p = project_to_level(norm_sq(2), {0.6, 0.8}, 1.0);
  CHECK(p[0] == doctest::Approx(0.6).epsilon(1e-7));

  p = project_to_level(norm_sq(1), {-5.0}, 1.0);
  CHECK(p[0] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("project_to_level is idempotent") {
  const auto cert = norm_sq(2);
  const Vec once = project_to_level(cert, {2.0, -1.0}, 2.5);
  const Vec twice = project_to_level(cert, once, 2.5);
  CHECK(norm(sub(once, twice)) <= 1e-8);
}

TEST_CASE("sphere_map: identity on the unit sphere, ellipse, and S^0") {
  const auto cert = norm_sq(2);
  auto s = sphere_map(cert, 1.0);
  const Vec u{0.6, 0.8};
  CHECK(norm(sub(s.forward(u), u)) <= 1e-12);
  CHECK(norm(sub(s.inverse(u), u)) <= 1e-9);

  LyapunovCertificate ell;
  ell.dim = 2;
  ell.V = [](const Vec& x) { return x[0] * x[0] + 4.0 * x[1] * x[1]; };
  auto se = sphere_map(ell, 1.0);
  const Vec p = se.inverse({0.0, 1.0});
  CHECK(p[0] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-9));

  auto s1 = sphere_map(norm_sq(1), 1.0);
  CHECK(s1.inverse({-1.0})[0] == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("sphere_map: round trip on the level set, unit norm exactly") {
  LyapunovCertificate ell;
  ell.dim = 2;
  ell.V = [](const Vec& x) { return 2.0 * x[0] * x[0] + x[1] * x[1]; };
  auto s = sphere_map(ell, 1.0);
  for (const auto& u : sphere_points(2, 16)) {
    const Vec x = s.inverse(u);
    CHECK(norm(sub(s.inverse(s.forward(x)), x)) <= 1e-8);
    CHECK(norm(s.forward(x)) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("sphere_map: inconsistent inward gradient is rejected as non-star-shaped") {
  LyapunovCertificate bad = norm_sq(2);
  bad.grad_V = [](const Vec& x) { return scaled(x, -1.0); };
  CHECK_THROWS_AS(sphere_map(bad, 1.0), Error);
}

TEST_CASE("estimate_L: radial projection closed form in R^2") {
  const auto cert = norm_sq(2);
  for (double s : {0.25, 1.0, 4.0}) {
    // ||DQ|| = 1/||x|| = 1/sqrt(s) on the level set, times safety 1.5
    CHECK(estimate_L(cert, 1.0, s, 8) ==
          doctest::Approx(1.5 / std::sqrt(s)).epsilon(1e-3));
  }
}

TEST_CASE("estimate_L: 1-D Q is locally constant") {
  CHECK(estimate_L(norm_sq(1), 1.0, 2.0, 4) <= 1e-8);
}

TEST_CASE("estimate_L is monotone in the sample count") {
  LyapunovCertificate ell;
  ell.dim = 2;
  ell.V = [](const Vec& x) { return x[0] * x[0] + 3.0 * x[1] * x[1]; };
  const double few = estimate_L(ell, 1.0, 1.0, 4);
  const double many = estimate_L(ell, 1.0, 1.0, 16);
  CHECK(many >= few * (1.0 - 1e-12));
}

TEST_CASE("fd_jacobian: linear map is reproduced") {
  auto f = [](const Vec& x) { return Vec{2.0 * x[0] - x[1], x[0] + 3.0 * x[1]}; };
  const Mat j = fd_jacobian(f, {0.4, -0.2});
  CHECK(j(0, 0) == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(j(0, 1) == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(j(1, 0) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(j(1, 1) == doctest::Approx(3.0).epsilon(1e-7));
}
