#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stab/errors.hpp"

namespace stab {

using ScalarFn = std::function<double(double)>;

struct QuadratureConfig {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_depth = 48;
};

// Adaptive quadrature of f over [a, b].  Error estimate is kept below
// max(abs_tol, rel_tol * |value|); throws NonConvergent when max_depth is
// exhausted first.
double integrate(const ScalarFn& f, double a, double b,
                 const QuadratureConfig& cfg = {});

struct InversionConfig {
  double tol = 1e-12;        // |f(x) - y| <= tol * (1 + |y|)
  int bracket_budget = 200;  // doubling steps when searching for an upper bracket
  int bisect_iters = 128;
  int newton_iters = 8;
};

// A class-K / K-infinity scalar map on [0, inf): evaluation, derivative
// (analytic or central-difference fallback) and bracketed inverse.
class MonotoneScalarFn {
public:
  enum class Tag { K, KInf, C1AtZero };

  MonotoneScalarFn() = default;
  MonotoneScalarFn(ScalarFn eval, ScalarFn deriv = {}, Tag tag = Tag::KInf,
                   ScalarFn inverse = {}, std::string label = {});

  double operator()(double s) const { return eval_(s); }
  double deriv(double s) const;
  // Analytic inverse when supplied, otherwise bracketed numeric inversion.
  double inverse(double y, const InversionConfig& cfg = {}) const;
  bool has_analytic_inverse() const { return static_cast<bool>(inverse_); }

  Tag tag() const { return tag_; }
  const std::string& label() const { return label_; }

  static MonotoneScalarFn identity();
  // s -> scale * s^p
  static MonotoneScalarFn power(double p, double scale = 1.0);
  // g o f
  static MonotoneScalarFn compose(const MonotoneScalarFn& g, const MonotoneScalarFn& f);

private:
  ScalarFn eval_;
  ScalarFn deriv_;
  ScalarFn inverse_;
  Tag tag_ = Tag::KInf;
  std::string label_;
};

// Solves f(x) = y for strictly increasing f; doubling bracket search, then
// bisection followed by a few Newton polish steps.
double invert(const MonotoneScalarFn& f, double y, const InversionConfig& cfg = {});

// Grid-cached antiderivative F(x) = int_{x0}^{x} g, with cubic Hermite
// interpolation between log-spaced knots (the integrand supplies exact
// derivatives at the knots).  Evaluation outside the knot range continues
// linearly with the end slope.
class CumulativeIntegral {
public:
  CumulativeIntegral(ScalarFn g, double x0, double grid_min, double grid_max,
                     int panels_per_decade = 192, QuadratureConfig cfg = {});

  double operator()(double x) const;
  double integrand(double x) const { return g_(x); }

private:
  ScalarFn g_;
  double x0_;
  std::vector<double> knots_;
  std::vector<double> values_;
  std::vector<double> slopes_;
};

struct Alpha4Options {
  // delta(a) <= min{a, alpha1(alpha3^{-1}(a))}, smooth on (0, inf).  The
  // default uses (1 - eps) * softmin; an override is accepted as long as it
  // passes a sampled admissibility check against the same bound.
  std::optional<MonotoneScalarFn> delta_override;
  double eps_shrink = 1e-3;
};

// alpha4(a) = (2/pi) * int_0^a delta(tau) / (1 + tau^2) dtau.
MonotoneScalarFn make_alpha4(const MonotoneScalarFn& alpha1,
                             const MonotoneScalarFn& alpha3,
                             const Alpha4Options& opt = {});

// rho(a) = exp(-int_a^1 1/alpha4), rho(0) = 0; derivative rho/alpha4.
MonotoneScalarFn make_rho(const MonotoneScalarFn& alpha4);

struct GammaOptions {
  double l_floor = 1e-12;  // cap for vanishing L(s)
  int level_grid = 64;
  double level_min = 1e-8;
};

// gamma = h^{-1} with h(r) = int_0^r a(s) ds, where a is a monotone lower
// envelope of min{s, s / max(L(s), l_floor)} sampled on (0, s_max].
MonotoneScalarFn make_gamma(const ScalarFn& level_jacobian_bound, double s_max,
                            const GammaOptions& opt = {});

enum class EnvelopeSide { Lower, Upper };

struct EnvelopeOptions {
  double eps_fit = 1e-9;   // relative tilt forcing strict increase
  double ramp_floor = 1e-9;
};

// Class-K-infinity function below (resp. above) all samples: running min
// (resp. max) + piecewise-linear interpolant + tilt/ramp for strict increase
// and unboundedness.
MonotoneScalarFn monotone_envelope(std::vector<std::pair<double, double>> samples,
                                   EnvelopeSide side,
                                   const EnvelopeOptions& opt = {});

// gamma(s)/gamma'(s) >= s * (1 - tol) at every grid point.
bool gamma_slope_property_ok(const MonotoneScalarFn& gamma,
                             const std::vector<double>& grid, double tol = 1e-9);

// Strict increase on a sampled grid.
bool strictly_increasing_on(const MonotoneScalarFn& f, const std::vector<double>& grid);

// Doubling probe for unboundedness (class K-infinity behaviour).
bool exceeds_bound_by_doubling(const MonotoneScalarFn& f, double bound,
                               double s0 = 1.0, int budget = 200);

std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace stab
