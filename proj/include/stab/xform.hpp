#pragma once

#include <functional>
#include <string>

#include "stab/kfun.hpp"
#include "stab/lyap.hpp"
#include "stab/sys.hpp"

namespace stab {

// Change of variables y = T(x): T(0) = 0, C1 everywhere, diffeomorphic away
// from the origin.
struct CoordinateChange {
  std::function<Vec(const Vec&)> forward;
  std::function<Vec(const Vec&)> inverse;
  std::function<Mat(const Vec&)> jacobian;
  std::size_t dim = 0;
  double c = 1.0;               // reference level
  MonotoneScalarFn gamma;       // V(T^{-1}(y)) = gamma(||y||)
  std::string provenance;
};

struct TransformedSystem {
  std::function<Vec(const Vec& y, const Vec& d)> rhs;
  DisturbedSystem base;
  CoordinateChange change;

  DisturbedSystem as_system() const;
};

struct ChangeOptions {
  GradientFlowConfig flow;
  int star_check_samples = 64;
  bool check_gamma_property = true;
};

// T(x) = gamma^{-1}(V(x)) Q(x),  T^{-1}(y) = psi(gamma(||y||) - c, S^{-1}(y/||y||)).
CoordinateChange build_change(const LyapunovCertificate& cert,
                              const MonotoneScalarFn& gamma, double c,
                              const ChangeOptions& opt = {});

// Jacobian from the product rule: h'(V) Q dV' + h(V) DQ with h = gamma^{-1};
// cross-check for the finite-difference route.
Mat analytic_change_jacobian(const LyapunovCertificate& cert,
                             const MonotoneScalarFn& gamma, double c, const Vec& x,
                             const GradientFlowConfig& cfg = {});

// f~(y,d) = DT(T^{-1}(y)) f(T^{-1}(y), d); identically 0 at the origin floor.
TransformedSystem pushforward(const DisturbedSystem& system,
                              const CoordinateChange& change);

struct FlowNormalFormOptions {
  double t_max = 1e6;            // event-search horizon for the level-crossing time
  double properness_probe_radius = 1e6;
  double properness_min_growth = 1e2;
  double sim_tol = 1e-10;
  GradientFlowConfig flow;
};

// Trajectory-transport construction for disturbance-free backward-complete
// UGAS systems; the transformed right-hand side is -y.
std::pair<CoordinateChange, TransformedSystem> flow_based_normal_form(
    const DisturbedSystem& system, const LyapunovCertificate& cert, double c = 1.0,
    const FlowNormalFormOptions& opt = {});

struct InputChange {
  std::function<Vec(const Vec&)> forward;   // R
  std::function<Vec(const Vec&)> inverse;   // R^{-1}
  MonotoneScalarFn alpha_tilde;
};

struct InputChangeOptions {
  int radii = 64;
  double r_min = 1e-3;
  double r_max = 10.0;
  // the safety factor absorbs sampling error, so a moderate count per radius
  // is enough even for expensive transformed right-hand sides
  int samples_per_radius = 512;
  double safety = 1.1;
  std::optional<MonotoneScalarFn> alpha_tilde_override;
};

// Input-space transformation v = R(d) = alpha_tilde(||d||)^2 d / ||d||, with
// alpha_tilde built so that the dissipation inequality
// L_{f_d}||x||^2 <= -||x||^2 + ||R(d)||^2 holds for an ISES system with gain
// alpha and c = lambda = 1.
InputChange input_change(const DisturbedSystem& system, const MonotoneScalarFn& alpha,
                         const InputChangeOptions& opt = {});

}  // namespace stab
