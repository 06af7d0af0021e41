#include "stab/kfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stab/types.hpp"

namespace stab {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EnvelopeFailure: return "EnvelopeFailure";
    case ErrorCode::DegenerateSamples: return "DegenerateSamples";
    case ErrorCode::LevelFloorHit: return "LevelFloorHit";
    case ErrorCode::StiffFlow: return "StiffFlow";
    case ErrorCode::NotStarShaped: return "NotStarShaped";
    case ErrorCode::GammaPropertyViolated: return "GammaPropertyViolated";
    case ErrorCode::BackwardBlowup: return "BackwardBlowup";
    case ErrorCode::BlowupDetected: return "BlowupDetected";
    case ErrorCode::MissingSignal: return "MissingSignal";
    case ErrorCode::UnknownName: return "UnknownName";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i)
    g[i] = std::exp(llo + (lhi - llo) * i / (n - 1));
  return g;
}

namespace {

double simpson(const ScalarFn& f, double a, double fa, double m, double fm,
               double b, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const ScalarFn& f, double a, double fa, double b, double fb,
                     double m, double fm, double whole, double tol, int depth,
                     const QuadratureConfig& cfg) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, fa, lm, flm, m, fm);
  const double right = simpson(f, m, fm, rm, frm, b, fb);
  const double err = (left + right - whole) / 15.0;
  if (std::abs(err) <= tol || (b - a) < 1e-15 * (std::abs(a) + std::abs(b)))
    return left + right + err;
  if (depth >= cfg.max_depth)
    raise(ErrorCode::NonConvergent,
          "adaptive quadrature exhausted max_depth on ["
          + std::to_string(a) + ", " + std::to_string(b) + "]");
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1, cfg)
       + adaptive_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1, cfg);
}

}  // namespace

double integrate(const ScalarFn& f, double a, double b, const QuadratureConfig& cfg) {
  if (cfg.abs_tol <= 0 || cfg.rel_tol <= 0 || cfg.max_depth < 1)
    raise(ErrorCode::ValidationError, "bad QuadratureConfig");
  if (a > b) raise(ErrorCode::ValidationError, "integrate: a > b");
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b);
  const double m = 0.5 * (a + b), fm = f(m);
  if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm))
    raise(ErrorCode::NonConvergent, "integrand not finite on interval");
  const double whole = simpson(f, a, fa, m, fm, b, fb);
  const double tol = std::max(cfg.abs_tol, cfg.rel_tol * std::abs(whole));
  return adaptive_step(f, a, fa, b, fb, m, fm, whole, tol, 0, cfg);
}

MonotoneScalarFn::MonotoneScalarFn(ScalarFn eval, ScalarFn deriv, Tag tag,
                                   ScalarFn inverse, std::string label)
    : eval_(std::move(eval)), deriv_(std::move(deriv)), inverse_(std::move(inverse)),
      tag_(tag), label_(std::move(label)) {}

double MonotoneScalarFn::deriv(double s) const {
  if (deriv_) return deriv_(s);
  const double h = 1e-6 * std::max(1.0, std::abs(s));
  if (s - h < 0.0) return (eval_(s + h) - eval_(s)) / h;
  return (eval_(s + h) - eval_(s - h)) / (2.0 * h);
}

double MonotoneScalarFn::inverse(double y, const InversionConfig& cfg) const {
  if (inverse_) return inverse_(y);
  return invert(*this, y, cfg);
}

MonotoneScalarFn MonotoneScalarFn::identity() {
  return MonotoneScalarFn([](double s) { return s; }, [](double) { return 1.0; },
                          Tag::KInf, [](double y) { return y; }, "identity");
}

MonotoneScalarFn MonotoneScalarFn::power(double p, double scale) {
  return MonotoneScalarFn(
      [p, scale](double s) { return scale * std::pow(s, p); },
      [p, scale](double s) { return scale * p * std::pow(s, p - 1.0); },
      Tag::KInf,
      [p, scale](double y) { return std::pow(y / scale, 1.0 / p); },
      "power");
}

MonotoneScalarFn MonotoneScalarFn::compose(const MonotoneScalarFn& g,
                                           const MonotoneScalarFn& f) {
  const Tag tag = (g.tag() == Tag::KInf && f.tag() == Tag::KInf) ? Tag::KInf : Tag::K;
  return MonotoneScalarFn(
      [g, f](double s) { return g(f(s)); },
      [g, f](double s) { return g.deriv(f(s)) * f.deriv(s); },
      tag,
      [g, f](double y) { return f.inverse(g.inverse(y)); },
      "compose");
}

double invert(const MonotoneScalarFn& f, double y, const InversionConfig& cfg) {
  const double tol = cfg.tol * (1.0 + std::abs(y));
  const double f0 = f(0.0);
  if (y < f0 - tol) raise(ErrorCode::OutOfRange, "invert: target below f(0)");
  if (std::abs(y - f0) <= tol) return 0.0;
  double lo = 0.0, hi = 1.0;
  int budget = cfg.bracket_budget;
  while (f(hi) < y) {
    lo = hi;
    hi *= 2.0;
    if (--budget <= 0 || !std::isfinite(hi))
      raise(ErrorCode::OutOfRange, "invert: doubling search failed to bracket target");
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < cfg.bisect_iters; ++i) {
    x = 0.5 * (lo + hi);
    const double fx = f(x);
    if (std::abs(fx - y) <= tol) break;
    (fx < y ? lo : hi) = x;
    if (hi - lo <= 1e-17 * (1.0 + std::abs(x))) break;
  }
  for (int i = 0; i < cfg.newton_iters; ++i) {
    const double fx = f(x);
    if (std::abs(fx - y) <= 0.01 * tol) break;
    const double d = f.deriv(x);
    if (!(d > 0.0) || !std::isfinite(d)) break;
    const double step = (fx - y) / d;
    const double xn = x - step;
    if (xn <= lo || xn >= hi) break;
    x = xn;
  }
  return x;
}

CumulativeIntegral::CumulativeIntegral(ScalarFn g, double x0, double grid_min,
                                       double grid_max, int panels_per_decade,
                                       QuadratureConfig cfg)
    : g_(std::move(g)), x0_(x0) {
  const int decades = std::max(1, (int)std::ceil(std::log10(grid_max / grid_min)));
  const int n = std::max(2, decades * panels_per_decade + 1);
  knots_ = log_grid(grid_min, grid_max, n);
  if (x0 < grid_min) knots_.insert(knots_.begin(), x0);
  // anchor the accumulation at the knot nearest x0 so that values stay
  // accurate where |F| is small even when the far tail is huge
  std::size_t anchor = 0;
  if (x0 > grid_min) {
    knots_.push_back(x0);
    std::sort(knots_.begin(), knots_.end());
    knots_.erase(std::unique(knots_.begin(), knots_.end()), knots_.end());
    anchor = (std::size_t)(std::lower_bound(knots_.begin(), knots_.end(), x0) - knots_.begin());
  }
  values_.resize(knots_.size());
  slopes_.resize(knots_.size());
  QuadratureConfig panel_cfg = cfg;
  panel_cfg.abs_tol = 1e-14;
  for (std::size_t i = 0; i < knots_.size(); ++i) slopes_[i] = g_(knots_[i]);
  values_[anchor] = 0.0;
  for (std::size_t i = anchor + 1; i < knots_.size(); ++i)
    values_[i] = values_[i - 1] + integrate(g_, knots_[i - 1], knots_[i], panel_cfg);
  for (std::size_t i = anchor; i-- > 0;)
    values_[i] = values_[i + 1] - integrate(g_, knots_[i], knots_[i + 1], panel_cfg);
}

double CumulativeIntegral::operator()(double x) const {
  if (x <= knots_.front())
    return values_.front() + slopes_.front() * (x - knots_.front());
  if (x >= knots_.back()) {
    if (x == knots_.back()) return values_.back();
    // rare tail evaluation outside the cached grid
    return values_.back() + integrate(g_, knots_.back(), x);
  }
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  const std::size_t j = (std::size_t)(it - knots_.begin());
  const double xa = knots_[j - 1], xb = knots_[j];
  const double h = xb - xa, t = (x - xa) / h;
  const double fa = values_[j - 1], fb = values_[j];
  const double da = slopes_[j - 1] * h, db = slopes_[j] * h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * fa + (t3 - 2 * t2 + t) * da
       + (-2 * t3 + 3 * t2) * fb + (t3 - t2) * db;
}

namespace {

constexpr double kRhoFloor = 1e-12;  // rho(a) := 0 for a <= this level
constexpr double kSoftminSharpness = 8.0;

double softmin(double u, double v) {
  // p-norm softmin, always <= min(u, v), smooth for u, v > 0
  const double p = kSoftminSharpness;
  const double m = std::min(u, v);
  if (m <= 0.0) return 0.0;
  const double a = std::pow(m / u, p), b = std::pow(m / v, p);
  return m * std::pow(a + b, -1.0 / p);
}

}  // namespace

MonotoneScalarFn make_alpha4(const MonotoneScalarFn& alpha1,
                             const MonotoneScalarFn& alpha3,
                             const Alpha4Options& opt) {
  ScalarFn delta;
  if (opt.delta_override) {
    const MonotoneScalarFn& d = *opt.delta_override;
    for (double a : log_grid(1e-8, 1e6, 200)) {
      const double bound = std::min(a, alpha1(alpha3.inverse(a)));
      if (d(a) > bound * (1.0 + 1e-9))
        raise(ErrorCode::ValidationError,
              "delta override exceeds min{a, alpha1(alpha3^-1(a))} at a="
              + std::to_string(a));
    }
    delta = [d](double a) { return d(a); };
  } else {
    const double shrink = 1.0 - opt.eps_shrink;
    delta = [alpha1, alpha3, shrink](double a) {
      if (a <= 0.0) return 0.0;
      return shrink * softmin(a, alpha1(alpha3.inverse(a)));
    };
  }
  ScalarFn integrand = [delta](double t) { return delta(t) / (1.0 + t * t); };
  auto cum = std::make_shared<CumulativeIntegral>(integrand, 0.0, 1e-12, 1e9);
  const double two_over_pi = 2.0 / M_PI;
  return MonotoneScalarFn(
      [cum, two_over_pi](double a) {
        if (a <= 0.0) return 0.0;
        return two_over_pi * (*cum)(a);
      },
      [cum, two_over_pi](double a) {
        if (a <= 0.0) return 0.0;
        return two_over_pi * cum->integrand(a);
      },
      MonotoneScalarFn::Tag::C1AtZero, {}, "alpha4");
}

MonotoneScalarFn make_rho(const MonotoneScalarFn& alpha4) {
  ScalarFn inv_a4 = [alpha4](double t) {
    const double v = alpha4(t);
    if (!(v > 0.0))
      raise(ErrorCode::NonConvergent, "make_rho: alpha4 not positive at tau=" + std::to_string(t));
    return 1.0 / v;
  };
  auto cum = std::make_shared<CumulativeIntegral>(inv_a4, 1.0, kRhoFloor, 1e6);
  ScalarFn eval = [cum](double a) {
    if (a <= kRhoFloor) return 0.0;
    const double e = (*cum)(a);
    if (e > 700.0) raise(ErrorCode::OutOfRange, "make_rho: overflow in exp");
    if (e < -745.0) return 0.0;
    return std::exp(e);
  };
  ScalarFn deriv = [eval, alpha4](double a) {
    if (a <= kRhoFloor) return 0.0;
    return eval(a) / alpha4(a);
  };
  return MonotoneScalarFn(std::move(eval), std::move(deriv),
                          MonotoneScalarFn::Tag::KInf, {}, "rho");
}

MonotoneScalarFn monotone_envelope(std::vector<std::pair<double, double>> samples,
                                   EnvelopeSide side, const EnvelopeOptions& opt) {
  if (samples.size() < 2)
    raise(ErrorCode::ValidationError, "monotone_envelope: need at least 2 samples");
  std::sort(samples.begin(), samples.end());
  for (auto& [s, v] : samples)
    if (!(s > 0.0)) raise(ErrorCode::ValidationError, "monotone_envelope: s must be > 0");

  const std::size_t n = samples.size();
  std::vector<double> s(n), b(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = samples[i].first;

  if (side == EnvelopeSide::Lower) {
    double run = std::numeric_limits<double>::infinity();
    for (std::size_t i = n; i-- > 0;) {
      run = std::min(run, samples[i].second);
      b[i] = run;
    }
    if (b[0] <= 0.0)
      raise(ErrorCode::DegenerateSamples,
            "monotone_envelope: nonpositive values make a positive lower envelope impossible");
  } else {
    double run = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      run = std::max(run, samples[i].second);
      b[i] = run;
    }
  }

  const double sN = s.back(), bN = b.back();
  double end_slope = std::max(bN / sN, (b[n - 1] - b[n - 2]) / std::max(s[n - 1] - s[n - 2], 1e-300));
  if (!(end_slope > 0.0)) end_slope = opt.ramp_floor;

  auto base = [s, b, sN, bN, end_slope](double x) {
    if (x <= 0.0) return 0.0;
    if (x >= sN) return bN + end_slope * (x - sN);
    const auto it = std::upper_bound(s.begin(), s.end(), x);
    const std::size_t j = (std::size_t)(it - s.begin());
    const double xa = (j == 0) ? 0.0 : s[j - 1];
    const double ya = (j == 0) ? 0.0 : b[j - 1];
    const double xb = s[j], yb = b[j];
    return ya + (yb - ya) * (x - xa) / (xb - xa);
  };

  const double eps = opt.eps_fit;
  ScalarFn eval;
  if (side == EnvelopeSide::Lower) {
    // tilt keeps the value strictly below samples yet within eps relative
    eval = [base, sN, eps](double x) {
      if (x <= 0.0) return 0.0;
      const double tilt = (x < sN) ? (1.0 - eps * (1.0 - x / sN)) : 1.0;
      return base(x) * tilt;
    };
  } else {
    const double r0 = eps * std::max(bN, opt.ramp_floor) / sN;
    eval = [base, sN, eps, r0](double x) {
      if (x <= 0.0) return 0.0;
      const double lift = 1.0 + eps * std::min(x / sN, 1.0);
      return base(x) * lift + r0 * x;
    };
  }
  return MonotoneScalarFn(std::move(eval), {}, MonotoneScalarFn::Tag::KInf, {},
                          side == EnvelopeSide::Lower ? "envelope_lower" : "envelope_upper");
}

MonotoneScalarFn make_gamma(const ScalarFn& level_jacobian_bound, double s_max,
                            const GammaOptions& opt) {
  std::vector<std::pair<double, double>> g;
  for (double s : log_grid(opt.level_min, s_max, opt.level_grid)) {
    const double L = std::max(level_jacobian_bound(s), opt.l_floor);
    const double v = std::min(s, s / L);
    if (!(v > 0.0))
      raise(ErrorCode::EnvelopeFailure,
            "make_gamma: constraint min{s, s/L(s)} not positive at s=" + std::to_string(s));
    g.emplace_back(s, v);
  }
  MonotoneScalarFn a = monotone_envelope(std::move(g), EnvelopeSide::Lower);
  ScalarFn a_eval = [a](double x) { return a(x); };
  auto h = std::make_shared<CumulativeIntegral>(a_eval, 0.0, std::min(opt.level_min, 1e-8),
                                                std::max(10.0 * s_max, 1e3));
  MonotoneScalarFn h_fn(
      [h](double r) { return r <= 0.0 ? 0.0 : (*h)(r); },
      [a](double r) { return a(r); },
      MonotoneScalarFn::Tag::KInf, {}, "h");
  return MonotoneScalarFn(
      [h_fn](double y) { return y <= 0.0 ? 0.0 : invert(h_fn, y); },
      [h_fn, a](double y) {
        if (y <= 0.0) return 0.0;
        const double r = invert(h_fn, y);
        const double ar = a(r);
        return ar > 0.0 ? 1.0 / ar : std::numeric_limits<double>::infinity();
      },
      MonotoneScalarFn::Tag::KInf,
      [h_fn](double r) { return r <= 0.0 ? 0.0 : h_fn(r); },
      "gamma");
}

bool gamma_slope_property_ok(const MonotoneScalarFn& gamma,
                             const std::vector<double>& grid, double tol) {
  for (double sv : grid) {
    const double d = gamma.deriv(sv);
    if (!(d > 0.0)) return false;
    if (gamma(sv) / d < sv * (1.0 - tol)) return false;
  }
  return true;
}

bool strictly_increasing_on(const MonotoneScalarFn& f, const std::vector<double>& grid) {
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(f(grid[i]) > f(grid[i - 1]))) return false;
  return true;
}

bool exceeds_bound_by_doubling(const MonotoneScalarFn& f, double bound,
                               double s0, int budget) {
  double s = s0;
  for (int i = 0; i < budget; ++i) {
    if (f(s) > bound) return true;
    s *= 2.0;
    if (!std::isfinite(s)) break;
  }
  return false;
}

double operator_norm(const Mat& a) {
  if (a.rows == 0 || a.cols == 0) return 0.0;
  // power iteration on A'A with a deterministic start
  Vec v(a.cols, 1.0);
  double nv = norm(v);
  for (double& x : v) x /= nv;
  double lam = 0.0;
  for (int it = 0; it < 100; ++it) {
    Vec av = a.apply(v);
    Vec w(a.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i)
      for (std::size_t j = 0; j < a.cols; ++j) w[j] += a(i, j) * av[i];
    const double nw = norm(w);
    if (nw == 0.0) return 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) v[j] = w[j] / nw;
    const double prev = lam;
    lam = nw;
    if (it > 4 && std::abs(lam - prev) <= 1e-13 * lam) break;
  }
  return std::sqrt(lam);
}

}  // namespace stab
