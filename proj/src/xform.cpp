#include "stab/xform.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "stab/odeint.hpp"
#include "stab/sampling.hpp"

namespace stab {

DisturbedSystem TransformedSystem::as_system() const {
  DisturbedSystem s;
  s.rhs = rhs;
  s.dim_x = base.dim_x;
  s.dim_d = base.dim_d;
  s.disturbance_radius = base.disturbance_radius;
  s.non_lipschitz_at_origin = base.non_lipschitz_at_origin;
  s.name = base.name + "~";
  return s;
}

namespace {

// Shared by the closures so the certificate outlives the returned change.
struct ChangeState {
  LyapunovCertificate cert;
  MonotoneScalarFn gamma;
  double c = 1.0;
  GradientFlowConfig flow;
  std::optional<SphereMap> sphere;
};

Vec zeros(std::size_t n) { return Vec(n, 0.0); }

}  // namespace

CoordinateChange build_change(const LyapunovCertificate& cert,
                              const MonotoneScalarFn& gamma, double c,
                              const ChangeOptions& opt) {
  if (!(c > 0.0)) raise(ErrorCode::ValidationError, "build_change: c must be positive");
  auto diag = check_certificate(cert);
  if (!diag.pass())
    raise(ErrorCode::ValidationError, "build_change: certificate rejected:\n" + diag.to_text());
  if (opt.check_gamma_property) {
    const auto grid = log_grid(1e-6, 1e3, 64);
    if (!strictly_increasing_on(gamma, grid))
      raise(ErrorCode::GammaPropertyViolated, "build_change: gamma not strictly increasing");
    if (!gamma_slope_property_ok(gamma, grid, 1e-6))
      raise(ErrorCode::GammaPropertyViolated,
            "build_change: gamma(s)/gamma'(s) >= s fails on the check grid");
  }

  auto st = std::make_shared<ChangeState>();
  st->cert = cert;
  st->gamma = gamma;
  st->c = c;
  st->flow = opt.flow;
  st->sphere.emplace(st->cert, c, opt.star_check_samples);  // star-shape pre-check

  // T without the origin floor; FD Jacobians probe through it safely.
  auto forward_raw = [st](const Vec& x) {
    const double v = st->cert.V(x);
    if (!(v > 0.0)) return zeros(st->cert.dim);
    const Vec q = q_map(st->cert, x, st->c, st->flow);
    return scaled(q, st->gamma.inverse(v));
  };

  CoordinateChange ch;
  ch.dim = cert.dim;
  ch.c = c;
  ch.gamma = gamma;
  ch.provenance = "level_set_radial";
  ch.forward = [st, forward_raw](const Vec& x) {
    if (st->cert.V(x) < st->flow.v_min) return zeros(st->cert.dim);
    return forward_raw(x);
  };
  ch.inverse = [st](const Vec& y) {
    const double r = norm(y);
    if (!(r > 0.0)) return zeros(st->cert.dim);
    const double v = st->gamma(r);
    if (v < st->flow.v_min) return zeros(st->cert.dim);
    const Vec p = st->sphere->inverse(scaled(y, 1.0 / r));
    return grad_flow(st->cert, p, v - st->c, st->flow);
  };
  ch.jacobian = [forward_raw](const Vec& x) { return fd_jacobian(forward_raw, x); };
  return ch;
}

Mat analytic_change_jacobian(const LyapunovCertificate& cert,
                             const MonotoneScalarFn& gamma, double c, const Vec& x,
                             const GradientFlowConfig& cfg) {
  const double v = cert.V(x);
  if (v < cfg.v_min)
    raise(ErrorCode::LevelFloorHit, "analytic_change_jacobian: V(x) below the level floor");
  const double hv = gamma.inverse(v);
  const double hpv = 1.0 / gamma.deriv(hv);
  const Vec q = q_map(cert, x, c, cfg);
  const Mat dq = fd_jacobian([&](const Vec& z) { return q_map(cert, z, c, cfg); }, x);
  const Vec g = cert.gradient(x);
  Mat j(cert.dim, cert.dim);
  for (std::size_t i = 0; i < cert.dim; ++i)
    for (std::size_t k = 0; k < cert.dim; ++k)
      j(i, k) = hpv * q[i] * g[k] + hv * dq(i, k);
  return j;
}

TransformedSystem pushforward(const DisturbedSystem& system,
                              const CoordinateChange& change) {
  if (system.dim_x != change.dim)
    raise(ErrorCode::ValidationError, "pushforward: dimension mismatch");
  TransformedSystem ts;
  ts.base = system;
  ts.change = change;
  const CoordinateChange ch = change;
  const auto base_rhs = system.rhs;
  const std::size_t n = system.dim_x;
  ts.rhs = [ch, base_rhs, n](const Vec& y, const Vec& d) {
    const double r = norm(y);
    // below the floor the change is only C1-matched to 0, not invertible
    if (!(r > 0.0) || ch.gamma(r) < 2.0 * limits::level_floor) return zeros(n);
    const Vec x = ch.inverse(y);
    const Vec f = base_rhs(x, d);
    const double nf = norm(f);
    if (!(nf > 0.0)) return zeros(n);
    // DT(x) f as a single directional difference; cheaper than the full
    // Jacobian and steps stay clear of the origin
    const double nx = norm(x);
    double h = 1e-6 * std::max(1.0, nx) / nf;
    if (nx > 0.0) h = std::min(h, 0.5 * nx / nf);
    Vec xp(x), xm(x);
    axpy(h, f, xp);
    axpy(-h, f, xm);
    return scaled(sub(ch.forward(xp), ch.forward(xm)), 1.0 / (2.0 * h));
  };
  return ts;
}

namespace {

struct FlowState {
  DisturbedSystem system;
  LyapunovCertificate cert;
  double c = 1.0;
  FlowNormalFormOptions opt;
  std::optional<SphereMap> sphere;

  StepControl control() const {
    StepControl ctl;
    ctl.rel_tol = opt.sim_tol;
    ctl.abs_tol = 1e-2 * opt.sim_tol;
    ctl.blowup_norm = limits::blowup_guard;
    return ctl;
  }

  OdeRhs rhs() const {
    const Vec d0(system.dim_d, 0.0);
    const auto f = system.rhs;
    return [f, d0](double, const Vec& x, Vec& dx) { dx = f(x, d0); };
  }

  // Crossing time of the reference level along the flow: V(phi(t, x)) = c.
  EventResult crossing(const Vec& x) const {
    const double v = cert.V(x);
    const double dir = v > c ? 1.0 : -1.0;
    EventResult r;
    try {
      r = integrate_until(
          rhs(), x, 0.0, dir * opt.t_max,
          [this](double, const Vec& z) { return cert.V(z) - c; }, control());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::BlowupDetected)
        raise(ErrorCode::BackwardBlowup,
              "flow_based_normal_form: backward flow escapes before reaching the "
              "reference level");
      throw;
    }
    if (!r.hit)
      raise(dir < 0.0 ? ErrorCode::BackwardBlowup : ErrorCode::NonConvergent,
            "flow_based_normal_form: no level crossing within the search horizon");
    return r;
  }
};

}  // namespace

std::pair<CoordinateChange, TransformedSystem> flow_based_normal_form(
    const DisturbedSystem& system, const LyapunovCertificate& cert, double c,
    const FlowNormalFormOptions& opt) {
  if (system.dim_d != 0)
    raise(ErrorCode::ValidationError,
          "flow_based_normal_form: construction needs a disturbance-free system");
  auto diag = check_certificate(cert);
  if (!diag.pass())
    raise(ErrorCode::ValidationError,
          "flow_based_normal_form: certificate rejected:\n" + diag.to_text());

  auto st = std::make_shared<FlowState>();
  st->system = system;
  st->cert = cert;
  st->c = c;
  st->opt = opt;
  st->sphere.emplace(st->cert, c);

  auto forward = [st](const Vec& x) {
    if (st->cert.V(x) < st->opt.flow.v_min) return zeros(st->cert.dim);
    const EventResult r = st->crossing(x);
    const double n = norm(r.x);
    if (!(n > 0.0))
      raise(ErrorCode::StiffFlow, "flow_based_normal_form: crossing point at origin");
    return scaled(r.x, std::exp(r.t) / n);
  };

  // W(x) = exp(t(x)) must be unbounded along rays, else T cannot be a global
  // change of variables (the level set is not reached in bounded time from far
  // out, or equivalently the backward flow blows up below every radius).
  for (const auto& u : sphere_points(cert.dim, 8)) {
    const double w1 = norm(forward(u));
    const double wr = norm(forward(scaled(u, opt.properness_probe_radius)));
    if (!(w1 > 0.0) || wr / w1 < opt.properness_min_growth)
      raise(ErrorCode::BackwardBlowup,
            "flow_based_normal_form: transported level time stays bounded along "
            "rays; transform would not be proper");
  }

  CoordinateChange ch;
  ch.dim = cert.dim;
  ch.c = c;
  // gamma is taken relative to the transported function W, where it is exact
  ch.gamma = MonotoneScalarFn::identity();
  ch.provenance = "flow_normal_form";
  ch.forward = forward;
  ch.inverse = [st](const Vec& y) {
    const double r = norm(y);
    if (!(r > 1e-300)) return zeros(st->cert.dim);
    const Vec p = st->sphere->inverse(scaled(y, 1.0 / r));
    return integrate_to(st->rhs(), p, 0.0, -std::log(r), st->control());
  };
  ch.jacobian = [forward](const Vec& x) { return fd_jacobian(forward, x); };

  TransformedSystem ts = pushforward(system, ch);
  return {ch, ts};
}

InputChange input_change(const DisturbedSystem& system, const MonotoneScalarFn& alpha,
                         const InputChangeOptions& opt) {
  if (system.dim_d == 0)
    raise(ErrorCode::ValidationError, "input_change: system has no disturbance channel");

  MonotoneScalarFn atil;
  if (opt.alpha_tilde_override) {
    atil = *opt.alpha_tilde_override;
  } else {
    if (opt.radii < 2 || opt.samples_per_radius < 1)
      raise(ErrorCode::ValidationError, "input_change: empty sampling plan");
    double r_hi = opt.r_max;
    if (std::isfinite(system.disturbance_radius) && system.disturbance_radius > 0.0)
      r_hi = std::min(r_hi, system.disturbance_radius);
    std::vector<std::pair<double, double>> samples;
    // joint (x, d) sequence; separate per-factor sequences would correlate
    LowDiscrepancySeq seq(system.dim_x + system.dim_d + 2);
    for (double r : log_grid(opt.r_min, r_hi, opt.radii)) {
      // sup of <f(x,d), x> over ||x|| <= alpha(r), ||d|| <= r; outside that
      // ball the quadratic-gain inequality already gives decay
      const double ar = alpha(r);
      double m_hat = 0.0;
      bool finite = true;
      for (int k = 0; k < opt.samples_per_radius; ++k) {
        const Vec u = seq.next();
        const Vec x = ball_from_unit(u.data(), system.dim_x, ar);
        const Vec d = ball_from_unit(u.data() + system.dim_x + 1, system.dim_d, r);
        // the sup in d is typically attained on the sphere ||d|| = r, which
        // ball samples almost never hit; probe both
        const double nd = norm(d);
        const double p = dot(system.rhs(x, d), x);
        const double ps = nd > 0.0 ? dot(system.rhs(x, scaled(d, r / nd)), x) : p;
        if (!std::isfinite(p) || !std::isfinite(ps)) { finite = false; break; }
        m_hat = std::max(m_hat, std::max(p, ps));
      }
      if (!finite)
        raise(ErrorCode::DegenerateSamples, "input_change: rhs not finite on samples");
      // ||v||^2 = atil(r)^4 >= 2 m_hat + alpha(r)^2 makes
      // d/dt ||x||^2 <= -||x||^2 + ||v||^2 hold on the sampled ball; the
      // safety factor also absorbs envelope chord error between knots
      samples.emplace_back(r, std::pow(opt.safety * (2.0 * m_hat + ar * ar), 0.25));
    }
    atil = monotone_envelope(std::move(samples), EnvelopeSide::Upper);
  }

  InputChange ic;
  ic.alpha_tilde = atil;
  const std::size_t m = system.dim_d;
  ic.forward = [atil, m](const Vec& d) {
    const double r = norm(d);
    if (!(r > 0.0)) return zeros(m);
    const double a = atil(r);
    return scaled(d, a * a / r);
  };
  ic.inverse = [atil, m](const Vec& v) {
    const double s = norm(v);
    if (!(s > 0.0)) return zeros(m);
    const double r = atil.inverse(std::sqrt(s));
    return scaled(v, r / s);
  };
  return ic;
}

}  // namespace stab
