#include "stab/lyap.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "stab/odeint.hpp"
#include "stab/sampling.hpp"

namespace stab {

Vec LyapunovCertificate::gradient(const Vec& x) const {
  if (grad_V) return grad_V(x);
  Vec g(x.size());
  const double nx = norm(x);
  double h = 1e-6 * std::max(1.0, nx);
  if (nx > 0.0) h = std::min(h, 0.5 * nx);
  Vec xp(x), xm(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (V(xp) - V(xm)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x) {
  const std::size_t n = x.size();
  const double nx = norm(x);
  double h = 1e-6 * std::max(1.0, nx);
  if (nx > 0.0) h = std::min(h, 0.5 * nx);
  Vec xp(x), xm(x);
  Mat j;
  for (std::size_t col = 0; col < n; ++col) {
    xp[col] = x[col] + h;
    xm[col] = x[col] - h;
    const Vec fp = f(xp), fm = f(xm);
    if (j.rows == 0) j = Mat(fp.size(), n);
    for (std::size_t row = 0; row < fp.size(); ++row)
      j(row, col) = (fp[row] - fm[row]) / (2.0 * h);
    xp[col] = x[col];
    xm[col] = x[col];
  }
  return j;
}

bool CertificateDiagnostics::pass() const {
  for (const auto& item : items)
    if (!item.pass) return false;
  return true;
}

std::string CertificateDiagnostics::to_text() const {
  std::ostringstream os;
  for (const auto& item : items) {
    os << item.name << " = " << (item.pass ? "pass" : "FAIL")
       << " (worst " << item.worst;
    if (!item.witness.empty()) {
      os << " at [";
      for (std::size_t i = 0; i < item.witness.size(); ++i)
        os << (i ? ", " : "") << item.witness[i];
      os << "]";
    }
    os << ")\n";
  }
  return os.str();
}

CertificateDiagnostics check_certificate(const LyapunovCertificate& cert,
                                         const SamplingPlan& plan) {
  CertificateDiagnostics diag;
  auto dirs = sphere_points(cert.dim, plan.directions, plan.offset);
  // always probe the coordinate axes; degeneracies tend to live there
  for (std::size_t i = 0; i < cert.dim; ++i) {
    Vec e(cert.dim, 0.0);
    e[i] = 1.0;
    dirs.push_back(e);
    e[i] = -1.0;
    dirs.push_back(e);
  }
  const auto radii = log_grid(plan.r_min, plan.r_max, plan.radii);

  CheckItem pd{"positive_definite"};
  CheckItem grad_nz{"gradient_nonvanishing"};
  pd.worst = grad_nz.worst = std::numeric_limits<double>::infinity();
  for (const auto& u : dirs) {
    for (double r : radii) {
      const Vec x = scaled(u, r);
      const double v = cert.V(x);
      if (v < pd.worst) { pd.worst = v; pd.witness = x; }
      const double g = norm(cert.gradient(x));
      if (g < grad_nz.worst) { grad_nz.worst = g; grad_nz.witness = x; }
    }
  }
  pd.pass = pd.worst > 0.0 && std::abs(cert.V(Vec(cert.dim, 0.0))) < 1e-12;
  grad_nz.pass = grad_nz.worst > 0.0;
  diag.items.push_back(pd);
  diag.items.push_back(grad_nz);

  // properness probe: V must keep growing along every sampled ray
  CheckItem proper{"proper"};
  proper.worst = std::numeric_limits<double>::infinity();
  for (const auto& u : dirs) {
    double prev = cert.V(scaled(u, plan.r_min));
    double min_growth = std::numeric_limits<double>::infinity();
    double r = plan.r_min;
    for (int k = 0; k < 24 && r < 4.0 * plan.r_max; ++k) {
      r *= 2.0;
      const double v = cert.V(scaled(u, r));
      min_growth = std::min(min_growth, v - prev);
      prev = v;
    }
    if (min_growth < proper.worst) { proper.worst = min_growth; proper.witness = u; }
  }
  proper.pass = proper.worst > 0.0;
  diag.items.push_back(proper);

  if (cert.bounds) {
    CheckItem bd{"sandwich_bounds"};
    bd.worst = 0.0;
    for (const auto& u : dirs) {
      for (double r : radii) {
        const Vec x = scaled(u, r);
        const double v = cert.V(x);
        const double lo = cert.bounds->alpha2(r), hi = cert.bounds->alpha3(r);
        const double viol = std::max(lo - v, v - hi) / (1.0 + v);
        if (viol > bd.worst) { bd.worst = viol; bd.witness = x; }
      }
    }
    bd.pass = bd.worst <= 1e-9;
    diag.items.push_back(bd);
  }
  return diag;
}

namespace {

// Newton polish along the gradient direction to land exactly on the target level.
void polish_to_level(const LyapunovCertificate& cert, Vec& x, double target,
                     double tol) {
  for (int i = 0; i < 40; ++i) {
    const double err = target - cert.V(x);
    if (std::abs(err) <= tol) return;
    const Vec g = cert.gradient(x);
    const double g2 = dot(g, g);
    if (!(g2 > 0.0)) return;
    axpy(err / g2, g, x);
  }
}

}  // namespace

Vec grad_flow(const LyapunovCertificate& cert, const Vec& x0, double t,
              const GradientFlowConfig& cfg) {
  if (!(norm(x0) > 0.0))
    raise(ErrorCode::ValidationError, "grad_flow: x0 must be nonzero");
  const double v0 = cert.V(x0);
  const double target = v0 + t;
  if (target < cfg.v_min)
    raise(ErrorCode::LevelFloorHit, "grad_flow: target level below v_min");
  Vec x = x0;
  // offsets at rounding scale are handled by the polish alone; an ODE span
  // that small trips the step-collapse guard
  if (std::abs(t) > 1e-10 * (1.0 + std::abs(v0))) {
    OdeRhs rhs = [&cert](double, const Vec& x, Vec& dx) {
      const Vec g = cert.gradient(x);
      const double g2 = dot(g, g);
      if (!(g2 > 1e-300))
        raise(ErrorCode::StiffFlow, "grad_flow: vanishing gradient away from origin");
      dx = scaled(g, 1.0 / g2);
    };
    StepControl ctl;
    ctl.rel_tol = std::min(1e-9, 0.1 * cfg.step_tol);
    ctl.abs_tol = 1e-13;
    ctl.max_steps = cfg.max_steps;
    x = integrate_to(rhs, x0, 0.0, t, ctl);
  }
  // tolerance follows the target level, not the transit span; flowing down to
  // tiny levels would otherwise leave a large relative error there
  polish_to_level(cert, x, target, 0.05 * cfg.step_tol * std::abs(target));
  return x;
}

Vec project_to_level(const LyapunovCertificate& cert, const Vec& x, double c,
                     const GradientFlowConfig& cfg) {
  if (c < cfg.v_min)
    raise(ErrorCode::LevelFloorHit, "project_to_level: c below v_min");
  return grad_flow(cert, x, c - cert.V(x), cfg);
}

namespace {

double ray_level_radius(const LyapunovCertificate& cert, const Vec& u, double c) {
  double hi = 1.0;
  int budget = 400;
  while (cert.V(scaled(u, hi)) < c) {
    hi *= 2.0;
    if (--budget <= 0 || !std::isfinite(hi))
      raise(ErrorCode::OutOfRange, "sphere_map: ray never reaches level c");
  }
  double lo = 0.0;
  for (int i = 0; i < 110; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cert.V(scaled(u, mid)) < c ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

SphereMap::SphereMap(const LyapunovCertificate& cert, double c, int check_samples)
    : cert_(cert), c_(c) {
  if (!(c > 0.0)) raise(ErrorCode::ValidationError, "sphere_map: level must be positive");
  for (const auto& u : sphere_points(cert.dim, check_samples)) {
    const double r = ray_level_radius(cert, u, c);
    const Vec x = scaled(u, r);
    if (!(dot(cert.gradient(x), x) > 0.0)) {
      std::ostringstream os;
      os << "level set not star-shaped at [";
      for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
      os << "]";
      raise(ErrorCode::NotStarShaped, os.str());
    }
  }
}

Vec SphereMap::forward(const Vec& x) const {
  const double n = norm(x);
  if (!(n > 0.0)) raise(ErrorCode::ValidationError, "SphereMap::forward: zero input");
  return scaled(x, 1.0 / n);
}

Vec SphereMap::inverse(const Vec& u) const {
  const double n = norm(u);
  if (!(n > 0.0)) raise(ErrorCode::ValidationError, "SphereMap::inverse: zero input");
  const Vec dir = scaled(u, 1.0 / n);
  return scaled(dir, ray_level_radius(cert_, dir, c_));
}

SphereMap sphere_map(const LyapunovCertificate& cert, double c, int check_samples) {
  return SphereMap(cert, c, check_samples);
}

Vec q_map(const LyapunovCertificate& cert, const Vec& x, double c_ref,
          const GradientFlowConfig& cfg) {
  const Vec p = project_to_level(cert, x, c_ref, cfg);
  const double n = norm(p);
  if (!(n > 0.0)) raise(ErrorCode::StiffFlow, "q_map: projection collapsed to origin");
  return scaled(p, 1.0 / n);
}

double estimate_L(const LyapunovCertificate& cert, double c_ref, double s,
                  int n_samples, const GradientFlowConfig& cfg) {
  if (s < cfg.v_min) raise(ErrorCode::LevelFloorHit, "estimate_L: s below v_min");
  SphereMap at_s(cert, s);
  auto q = [&](const Vec& x) { return q_map(cert, x, c_ref, cfg); };
  double worst = 0.0;
  for (const auto& u : sphere_points(cert.dim, n_samples)) {
    const Vec x = at_s.inverse(u);
    worst = std::max(worst, operator_norm(fd_jacobian(q, x)));
  }
  return 1.5 * worst;
}

}  // namespace stab
