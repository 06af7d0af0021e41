#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "stab/kfun.hpp"
#include "stab/types.hpp"

namespace stab {

// Proper positive definite V with gradient; optional ISS gain and K-infinity
// sandwich bounds alpha2 <= V <= alpha3.
struct LyapunovCertificate {
  std::function<double(const Vec&)> V;
  std::function<Vec(const Vec&)> grad_V;  // empty: central-difference fallback
  std::size_t dim = 0;

  struct IssGain {
    MonotoneScalarFn chi;
    MonotoneScalarFn alpha1;
  };
  std::optional<IssGain> iss_gain;

  // UGAS decay rate: L_f V(x) <= -alpha1(||x||)
  std::optional<MonotoneScalarFn> alpha1;

  struct Bounds {
    MonotoneScalarFn alpha2;
    MonotoneScalarFn alpha3;
  };
  std::optional<Bounds> bounds;

  Vec gradient(const Vec& x) const;
};

struct GradientFlowConfig {
  double step_tol = 1e-8;   // level error per unit level change
  double v_min = limits::level_floor;
  long max_steps = 200000;
};

struct SamplingPlan {
  int directions = 32;
  int radii = 16;
  double r_min = 1e-3;
  double r_max = 1e3;
  std::uint64_t offset = 0;
};

struct CheckItem {
  std::string name;
  bool pass = true;
  double worst = 0.0;
  Vec witness;
};

struct CertificateDiagnostics {
  std::vector<CheckItem> items;
  bool pass() const;
  std::string to_text() const;
};

// Sampled verification of the certificate hypotheses on V.
CertificateDiagnostics check_certificate(const LyapunovCertificate& cert,
                                         const SamplingPlan& plan = {});

// psi(t, x0): normalized gradient flow transporting V(x0) to V(x0) + t.
Vec grad_flow(const LyapunovCertificate& cert, const Vec& x0, double t,
              const GradientFlowConfig& cfg = {});

// pi(x) = psi(c - V(x), x)
Vec project_to_level(const LyapunovCertificate& cert, const Vec& x, double c,
                     const GradientFlowConfig& cfg = {});

// Radial diffeomorphism between V^{-1}(c) and the unit sphere; valid for
// star-shaped level sets only (pre-checked on samples).
class SphereMap {
public:
  SphereMap(const LyapunovCertificate& cert, double c, int check_samples = 64);

  Vec forward(const Vec& x) const;   // x / ||x||
  Vec inverse(const Vec& u) const;   // r(u) * u with V(r u) = c
  double level() const { return c_; }

private:
  LyapunovCertificate cert_;  // by value so temporaries are safe to pass
  double c_;
};

SphereMap sphere_map(const LyapunovCertificate& cert, double c, int check_samples = 64);

// Q = S o pi with S at level c_ref.
Vec q_map(const LyapunovCertificate& cert, const Vec& x, double c_ref,
          const GradientFlowConfig& cfg = {});

// Sampled sup of ||DQ|| over V^{-1}(s), times safety factor 1.5.
double estimate_L(const LyapunovCertificate& cert, double c_ref, double s,
                  int n_samples, const GradientFlowConfig& cfg = {});

// Central-difference Jacobian with step 1e-6 * max(1, ||x||), capped at
// ||x||/2 so probes never cross the origin region.
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x);

}  // namespace stab
