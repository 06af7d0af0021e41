#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "stab/sys.hpp"

using namespace stab;

namespace {

DisturbedSystem linear_decay() {
  DisturbedSystem s;
  s.dim_x = 1;
  s.dim_d = 0;
  s.disturbance_radius = 0.0;
  s.rhs = [](const Vec& x, const Vec&) { return Vec{-x[0]}; };
  return s;
}

}  // namespace

TEST_CASE("simulate: exponential closed form") {
  const auto traj = simulate(linear_decay(), {1.0}, DisturbanceSignal::zero(0), 1.0, 1e-8);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == doctest::Approx(1.0));
  CHECK(traj.states.back()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-7));
}

TEST_CASE("simulate: zero initial state stays pinned") {
  const auto traj = simulate(linear_decay(), {0.0}, DisturbanceSignal::zero(0), 2.0, 1e-8);
  for (const auto& x : traj.states) CHECK(x[0] == 0.0);
}

TEST_CASE("simulate: variation of constants with d = 1") {
  DisturbedSystem s;
  s.dim_x = 1;
  s.dim_d = 1;
  s.rhs = [](const Vec& x, const Vec& d) { return Vec{-x[0] + d[0]}; };
  const auto traj = simulate(s, {0.0}, DisturbanceSignal::constant({1.0}), 1.0, 1e-8);
  CHECK(traj.states.back()[0] == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-7));
}

TEST_CASE("simulate: halving tol halves the closed-form deviation or better") {
  const Vec x0{1.0};
  auto dev = [&](double tol) {
    const auto traj = simulate(linear_decay(), x0, DisturbanceSignal::zero(0), 5.0, tol);
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.times.size(); ++k)
      worst = std::max(worst, std::abs(traj.states[k][0] - std::exp(-traj.times[k])));
    return worst;
  };
  const double coarse = dev(1e-5);
  const double fine = dev(5e-6);
  CHECK(fine <= 0.5 * coarse + 1e-15);
}

TEST_CASE("simulate: determinism for a fixed signal") {
  DisturbedSystem s;
  s.dim_x = 1;
  s.dim_d = 1;
  s.rhs = [](const Vec& x, const Vec& d) { return Vec{-x[0] + d[0]}; };
  const auto sig = make_disturbance({1, 1.0, 0.5}, 3.0, 7);
  const auto a = simulate(s, {0.5}, sig, 3.0, 1e-8);
  const auto b = simulate(s, {0.5}, sig, 3.0, 1e-8);
  for (std::size_t k = 0; k < a.states.size(); ++k)
    CHECK(a.states[k][0] == b.states[k][0]);
}

TEST_CASE("simulate: blowup guard") {
  DisturbedSystem s;
  s.dim_x = 1;
  s.dim_d = 0;
  s.rhs = [](const Vec& x, const Vec&) { return Vec{x[0] * x[0]}; };
  CHECK_THROWS_AS(simulate(s, {10.0}, DisturbanceSignal::zero(0), 1.0, 1e-8), Error);
}

TEST_CASE("DisturbanceSignal: exact sup norm over a prefix") {
  DisturbanceSignal sig;
  sig.switch_times = {1.0};
  sig.values = {Vec{1.0}, Vec{-1.0}};
  CHECK(sig.sup_norm(0.5) == 1.0);
  CHECK(sig.sup_norm(2.0) == 1.0);
  CHECK(sig.at(0.5)[0] == 1.0);
  CHECK(sig.at(1.5)[0] == -1.0);
}

TEST_CASE("make_disturbance: determinism, amplitude bound, zero amplitude") {
  const auto a = make_disturbance({2, 0.7, 0.4}, 5.0, 42);
  const auto b = make_disturbance({2, 0.7, 0.4}, 5.0, 42);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    CHECK(a.values[i] == b.values[i]);
    CHECK(norm(a.values[i]) <= 0.7 + 1e-12);
  }
  const auto z = make_disturbance({2, 0.0, 0.4}, 5.0, 3);
  for (const auto& v : z.values) CHECK(norm(v) == 0.0);
}

TEST_CASE("catalog: expected entries and oracle gain algebra") {
  for (const char* name : {"halfspeed_1d", "cubic_1d", "iss_scalar", "linear_2d", "spiral_2d"})
    CHECK_NOTHROW(catalog(name));
  CHECK_THROWS_AS(catalog("no_such_system"), Error);

  // |x| > 2|d|  =>  L_f V <= -alpha1(|x|) for the scalar ISS example
  const auto& e = catalog("iss_scalar");
  REQUIRE(e.cert.iss_gain.has_value());
  for (double x : {-3.0, -0.5, 0.2, 1.0, 10.0}) {
    for (double frac : {0.0, 0.3, 0.49}) {
      const double d = frac * std::abs(x) * (x > 0 ? 1.0 : -1.0);
      const double lv = dot(e.cert.gradient({x}), e.system.rhs({x}, {d}));
      CHECK(lv <= -e.cert.iss_gain->alpha1(std::abs(x)) + 1e-12);
    }
  }
}

TEST_CASE("catalog: halfspeed reference transform is sign(x) x^2") {
  const auto& e = catalog("halfspeed_1d");
  CHECK(e.ref_forward({2.0})[0] == 4.0);
  CHECK(e.ref_forward({-0.5})[0] == -0.25);
}

TEST_CASE("trajectory CSV: header and row count") {
  const auto traj = simulate(linear_decay(), {1.0}, DisturbanceSignal::zero(0), 1.0, 1e-8);
  const std::string path = "test_traj_out.csv";
  write_trajectory_csv(traj, path);
  std::ifstream f(path);
  REQUIRE(bool(f));
  std::string header;
  std::getline(f, header);
  CHECK(header == "t,x1,norm");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(f, line)) ++rows;
  CHECK(rows == traj.times.size());
  std::remove(path.c_str());
}
