#include "stab/odeint.hpp"

#include <algorithm>
#include <cmath>

namespace stab {

namespace {

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output weights
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

double initial_step(const OdeRhs& rhs, const Vec& x0, const Vec& f0, double t0,
                    double dir, const StepControl& ctl) {
  const double d0 = norm(x0), dd0 = norm(f0);
  double h = (d0 > 1e-5 && dd0 > 1e-5) ? 0.01 * d0 / dd0 : 1e-6;
  h = std::min(h, ctl.h_max);
  // one explicit Euler probe to bound the second derivative
  Vec x1(x0), f1(x0.size());
  axpy(dir * h, f0, x1);
  rhs(t0 + dir * h, x1, f1);
  const double dd1 = norm(sub(f1, f0)) / h;
  const double m = std::max(dd0, dd1);
  if (m > 1e-15) h = std::min(h, std::pow(0.01 / m, 0.2));
  return std::max(h, 1e-12);
}

}  // namespace

Vec DenseStep::eval(double t) const {
  const double h = t1 - t0;
  const double th = (h == 0.0) ? 0.0 : (t - t0) / h;
  const double th1 = 1.0 - th;
  Vec y(r1);
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
  return y;
}

void dopri5_integrate(const OdeRhs& rhs, Vec x0, double t0, double t1,
                      const StepControl& ctl,
                      const std::function<bool(const DenseStep&)>& on_step) {
  const std::size_t n = x0.size();
  const double dir = (t1 >= t0) ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  if (span == 0.0) return;

  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), xt(n), xe(n);
  Vec x = std::move(x0);
  double t = t0;
  rhs(t, x, k1);
  double h = (ctl.h_init > 0.0) ? ctl.h_init : initial_step(rhs, x, k1, t, dir, ctl);
  h = std::min(h, std::min(ctl.h_max, span));

  long steps = 0;
  while (dir * (t1 - t) > 0.0) {
    if (++steps > ctl.max_steps)
      raise(ErrorCode::NonConvergent, "dopri5: max step count exceeded");
    if (h < 1e-14 * std::max(1.0, std::abs(t)))
      raise(ErrorCode::StiffFlow, "dopri5: step size collapsed at t=" + std::to_string(t));
    h = std::min(h, dir * (t1 - t));
    const double hs = dir * h;

    auto stage = [&](Vec& out, std::initializer_list<std::pair<double, const Vec*>> terms) {
      out = x;
      for (auto& [c, k] : terms) axpy(hs * c, *k, out);
    };
    stage(xt, {{a21, &k1}});
    rhs(t + c2 * hs, xt, k2);
    stage(xt, {{a31, &k1}, {a32, &k2}});
    rhs(t + c3 * hs, xt, k3);
    stage(xt, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
    rhs(t + c4 * hs, xt, k4);
    stage(xt, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
    rhs(t + c5 * hs, xt, k5);
    stage(xt, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
    rhs(t + hs, xt, k6);
    stage(xe, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    rhs(t + hs, xe, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i]
                              + e6 * k6[i] + e7 * k7[i]);
      const double sc = ctl.abs_tol + ctl.rel_tol * std::max(std::abs(x[i]), std::abs(xe[i]));
      err += (ei / sc) * (ei / sc);
    }
    err = std::sqrt(err / double(n));

    if (err <= 1.0) {
      DenseStep ds;
      ds.t0 = t;
      ds.t1 = t + hs;
      ds.r1 = x;
      ds.r2 = sub(xe, x);
      ds.r3 = sub(scaled(k1, hs), ds.r2);
      ds.r4 = sub(sub(ds.r2, scaled(k7, hs)), ds.r3);
      ds.r5.assign(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        ds.r5[i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i]
                         + d6 * k6[i] + d7 * k7[i]);
      t += hs;
      x = xe;
      k1 = k7;  // FSAL
      if (norm(x) > ctl.blowup_norm)
        raise(ErrorCode::BlowupDetected, "dopri5: state norm exceeded blowup guard");
      if (!on_step(ds)) return;
    }
    const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
    h = std::min(h * fac, ctl.h_max);
  }
}

Vec integrate_to(const OdeRhs& rhs, Vec x0, double t0, double t1,
                 const StepControl& ctl) {
  Vec out = x0;
  dopri5_integrate(rhs, std::move(x0), t0, t1, ctl, [&](const DenseStep& s) {
    out = s.eval(s.t1);
    return true;
  });
  return out;
}

void integrate_observe(const OdeRhs& rhs, Vec x0, double t0, double t1,
                       const StepControl& ctl, const std::vector<double>& times,
                       const std::function<void(double, const Vec&)>& observer) {
  std::size_t idx = 0;
  const double dir = (t1 >= t0) ? 1.0 : -1.0;
  while (idx < times.size() && dir * (times[idx] - t0) <= 0.0) {
    observer(times[idx], x0);
    ++idx;
  }
  dopri5_integrate(rhs, std::move(x0), t0, t1, ctl, [&](const DenseStep& s) {
    while (idx < times.size() && dir * (times[idx] - s.t1) <= 0.0) {
      observer(times[idx], s.eval(times[idx]));
      ++idx;
    }
    return true;
  });
}

EventResult integrate_until(const OdeRhs& rhs, Vec x0, double t0, double t_max,
                            const std::function<double(double, const Vec&)>& event,
                            const StepControl& ctl) {
  EventResult res;
  double g_prev = event(t0, x0);
  if (g_prev == 0.0) return {true, t0, x0};
  res.x = x0;
  dopri5_integrate(rhs, std::move(x0), t0, t_max, ctl, [&](const DenseStep& s) {
    const Vec x_end = s.eval(s.t1);
    const double g_end = event(s.t1, x_end);
    if (g_prev * g_end <= 0.0) {
      double lo = s.t0, hi = s.t1;
      double glo = g_prev;
      for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double gm = event(mid, s.eval(mid));
        if (glo * gm <= 0.0) hi = mid; else { lo = mid; glo = gm; }
      }
      res.hit = true;
      res.t = 0.5 * (lo + hi);
      res.x = s.eval(res.t);
      return false;
    }
    g_prev = g_end;
    res.x = x_end;
    res.t = s.t1;
    return true;
  });
  return res;
}

}  // namespace stab
