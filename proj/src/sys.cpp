#include "stab/sys.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "stab/odeint.hpp"
#include "stab/sampling.hpp"

namespace stab {

Vec DisturbanceSignal::at(double t) const {
  std::size_t i = 0;
  while (i < switch_times.size() && t >= switch_times[i]) ++i;
  return values.at(i);
}

double DisturbanceSignal::sup_norm(double t) const {
  double sup = norm(values.at(0));
  for (std::size_t i = 0; i < switch_times.size(); ++i) {
    if (switch_times[i] > t) break;
    sup = std::max(sup, norm(values.at(i + 1)));
  }
  return sup;
}

DisturbanceSignal DisturbanceSignal::zero(std::size_t dim_d) {
  DisturbanceSignal s;
  s.values.push_back(Vec(dim_d, 0.0));
  return s;
}

DisturbanceSignal DisturbanceSignal::constant(Vec v) {
  DisturbanceSignal s;
  s.values.push_back(std::move(v));
  return s;
}

Trajectory simulate(const DisturbedSystem& system, const Vec& x0,
                    const DisturbanceSignal& d, double t_end, double tol,
                    int report_points) {
  if (!(t_end > 0.0)) raise(ErrorCode::ValidationError, "simulate: t_end must be > 0");
  for (double v : x0)
    if (!std::isfinite(v)) raise(ErrorCode::ValidationError, "simulate: x0 not finite");
  report_points = std::max(report_points, 200);

  Trajectory traj;
  traj.input = d;
  traj.tol_used = tol;
  traj.times.resize(report_points);
  for (int i = 0; i < report_points; ++i)
    traj.times[i] = t_end * double(i) / double(report_points - 1);
  traj.states.resize(report_points);

  // integration restarts exactly at the switch times
  std::vector<double> breaks{0.0};
  for (double ts : d.switch_times)
    if (ts > 0.0 && ts < t_end) breaks.push_back(ts);
  breaks.push_back(t_end);

  StepControl ctl;
  ctl.rel_tol = tol;
  ctl.abs_tol = 1e-2 * tol;
  ctl.blowup_norm = limits::blowup_guard;

  Vec x = x0;
  std::size_t report_idx = 0;
  bool pinned = false;
  for (std::size_t seg = 0; seg + 1 < breaks.size(); ++seg) {
    const double ta = breaks[seg], tb = breaks[seg + 1];
    const Vec dval = d.at(0.5 * (ta + tb));
    if (!pinned && norm(x) < limits::equilibrium_pin
        && norm(system.rhs(Vec(system.dim_x, 0.0), dval)) < 1e-10)
      pinned = true;
    if (pinned) {
      x.assign(system.dim_x, 0.0);
      while (report_idx < traj.times.size() && traj.times[report_idx] <= tb + 1e-15)
        traj.states[report_idx++] = x;
      continue;
    }
    std::vector<double> seg_times;
    while (report_idx < traj.times.size() && traj.times[report_idx] <= tb + 1e-15) {
      seg_times.push_back(std::min(traj.times[report_idx], tb));
      ++report_idx;
    }
    const std::size_t first = report_idx - seg_times.size();
    OdeRhs rhs = [&system, &dval](double, const Vec& xs, Vec& dx) {
      dx = system.rhs(xs, dval);
    };
    std::size_t k = 0;
    Vec xend = x;
    dopri5_integrate(rhs, x, ta, tb, ctl, [&](const DenseStep& s) {
      while (k < seg_times.size() && seg_times[k] <= s.t1) {
        traj.states[first + k] = s.eval(seg_times[k]);
        ++k;
      }
      xend = s.eval(s.t1);
      return true;
    });
    while (k < seg_times.size()) traj.states[first + k++] = xend;
    x = xend;
  }
  // in case the last report time fell on t_end within rounding
  while (report_idx < traj.times.size()) traj.states[report_idx++] = x;
  return traj;
}

DisturbanceSignal make_disturbance(const DisturbanceSpec& spec, double t_end,
                                   std::uint64_t seed) {
  DisturbanceSignal sig;
  sig.seed = seed;
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> dwell(1.0 / std::max(spec.mean_dwell, 1e-6));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto draw_value = [&]() {
    Vec v(spec.dim_d);
    if (spec.amplitude <= 0.0) return Vec(spec.dim_d, 0.0);
    for (double& c : v) c = gauss(rng);
    const double n = norm(v);
    const double r = spec.amplitude * std::pow(unif(rng), 1.0 / double(std::max<std::size_t>(spec.dim_d, 1)));
    if (n > 0.0)
      for (double& c : v) c *= r / n;
    return v;
  };

  sig.values.push_back(draw_value());
  double t = 0.0;
  while (true) {
    t += std::max(dwell(rng), 1e-3);
    if (t >= t_end) break;
    sig.switch_times.push_back(t);
    sig.values.push_back(draw_value());
  }
  return sig;
}

namespace {

LyapunovCertificate quadratic_norm_cert(std::size_t dim) {
  LyapunovCertificate cert;
  cert.dim = dim;
  cert.V = [](const Vec& x) { return dot(x, x); };
  cert.grad_V = [](const Vec& x) { return scaled(x, 2.0); };
  cert.bounds = LyapunovCertificate::Bounds{MonotoneScalarFn::power(2.0),
                                            MonotoneScalarFn::power(2.0)};
  return cert;
}

std::vector<CatalogEntry> build_catalog() {
  std::vector<CatalogEntry> cat;

  {
    CatalogEntry e;
    e.name = "halfspeed_1d";
    e.description = "dx/dt = -x/2 with V = x^2";
    e.system.name = e.name;
    e.system.dim_x = 1;
    e.system.dim_d = 0;
    e.system.disturbance_radius = 0.0;
    e.system.rhs = [](const Vec& x, const Vec&) { return Vec{-0.5 * x[0]}; };
    e.cert = quadratic_norm_cert(1);
    e.cert.alpha1 = MonotoneScalarFn::power(2.0);  // L_f V = -x^2
    e.ref_forward = [](const Vec& x) {
      return Vec{x[0] >= 0.0 ? x[0] * x[0] : -x[0] * x[0]};
    };
    e.suggested_gamma = MonotoneScalarFn::identity();
    e.suggested_alpha4 = MonotoneScalarFn::identity();  // L_f V = -V
    cat.push_back(std::move(e));
  }
  {
    CatalogEntry e;
    e.name = "cubic_1d";
    e.description = "dx/dt = -x^3 (nontrivial center manifold)";
    e.system.name = e.name;
    e.system.dim_x = 1;
    e.system.dim_d = 0;
    e.system.disturbance_radius = 0.0;
    e.system.rhs = [](const Vec& x, const Vec&) { return Vec{-x[0] * x[0] * x[0]}; };
    e.cert = quadratic_norm_cert(1);
    e.cert.alpha1 = MonotoneScalarFn::power(4.0, 2.0);  // L_f V = -2 x^4
    // V_1(x) = exp(-1/(2 x^2)): the only candidate making the system y' = -y
    e.ref_forward = [](const Vec& x) {
      if (x[0] == 0.0) return Vec{0.0};
      const double v = std::exp(-1.0 / (2.0 * x[0] * x[0]));
      return Vec{x[0] > 0.0 ? v : -v};
    };
    cat.push_back(std::move(e));
  }
  {
    CatalogEntry e;
    e.name = "iss_scalar";
    e.description = "dx/dt = -x + d with V = x^2, chi(r) = 2r";
    e.system.name = e.name;
    e.system.dim_x = 1;
    e.system.dim_d = 1;
    e.system.rhs = [](const Vec& x, const Vec& d) { return Vec{-x[0] + d[0]}; };
    e.cert = quadratic_norm_cert(1);
    // |x| > 2|d|  =>  L_f V = -2x^2 + 2xd <= -x^2 <= -x^2/2
    e.cert.iss_gain = LyapunovCertificate::IssGain{MonotoneScalarFn::power(1.0, 2.0),
                                                   MonotoneScalarFn::power(2.0, 0.5)};
    e.suggested_gamma = MonotoneScalarFn::identity();
    e.suggested_alpha4 = MonotoneScalarFn::identity();
    cat.push_back(std::move(e));
  }
  {
    CatalogEntry e;
    e.name = "linear_2d";
    e.description = "dx/dt = -x in R^2";
    e.system.name = e.name;
    e.system.dim_x = 2;
    e.system.dim_d = 0;
    e.system.disturbance_radius = 0.0;
    e.system.rhs = [](const Vec& x, const Vec&) { return scaled(x, -1.0); };
    e.cert = quadratic_norm_cert(2);
    e.cert.alpha1 = MonotoneScalarFn::power(2.0, 2.0);  // L_f V = -2||x||^2
    e.suggested_gamma = MonotoneScalarFn::identity();
    e.suggested_alpha4 = MonotoneScalarFn::identity();
    cat.push_back(std::move(e));
  }
  {
    CatalogEntry e;
    e.name = "spiral_2d";
    e.description = "Hurwitz spiral dx1/dt = -x1 + x2, dx2/dt = -x1 - x2";
    e.system.name = e.name;
    e.system.dim_x = 2;
    e.system.dim_d = 0;
    e.system.disturbance_radius = 0.0;
    e.system.rhs = [](const Vec& x, const Vec&) {
      return Vec{-x[0] + x[1], -x[0] - x[1]};
    };
    e.cert = quadratic_norm_cert(2);
    e.cert.alpha1 = MonotoneScalarFn::power(2.0, 2.0);  // skew part drops out
    e.suggested_gamma = MonotoneScalarFn::identity();
    e.suggested_alpha4 = MonotoneScalarFn::identity();
    cat.push_back(std::move(e));
  }
  return cat;
}

}  // namespace

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> cat = build_catalog();
  return cat;
}

const CatalogEntry& catalog(const std::string& name) {
  for (const auto& e : catalog())
    if (e.name == name) return e;
  raise(ErrorCode::UnknownName, "no catalog entry named '" + name + "'");
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) raise(ErrorCode::IoError, "cannot open " + path);
  const std::size_t n = traj.states.empty() ? 0 : traj.states.front().size();
  std::fprintf(f, "t");
  for (std::size_t i = 1; i <= n; ++i) std::fprintf(f, ",x%zu", i);
  std::fprintf(f, ",norm\n");
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    std::fprintf(f, "%.17g", traj.times[k]);
    for (double v : traj.states[k]) std::fprintf(f, ",%.17g", v);
    std::fprintf(f, ",%.17g\n", norm(traj.states[k]));
  }
  std::fclose(f);
}

}  // namespace stab
