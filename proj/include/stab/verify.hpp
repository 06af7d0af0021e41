#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stab/kfun.hpp"
#include "stab/sys.hpp"
#include "stab/xform.hpp"

namespace stab {

enum class SpecKind { UGES, IssMax, ISES, HINF, Contraction, GainDecay };

const char* spec_kind_name(SpecKind k);
SpecKind spec_kind_from_name(const std::string& name);

// Exponential-envelope stability estimate: ||x(t)|| bounded by
// c e^{-lambda t}||x0||, maxed with alpha(sup||d||) for the ISS-type kinds.
struct StabilitySpec {
  SpecKind kind = SpecKind::UGES;
  double c = 1.0;
  double lambda = 1.0;
  std::optional<MonotoneScalarFn> alpha;
  double slack = 1e-3;

  void validate() const;  // c >= 1, lambda > 0, slack >= 0
};

struct ReportSection {
  std::string stage;
  StabilitySpec spec;
  std::string alpha_label;  // serialized in place of spec.alpha
  bool pass = false;
  double worst = 0.0;       // worst margin (ratio) or worst residual
  long samples = 0;
  long skipped = 0;         // gain-decay samples inside the gain ball
  double witness_t = 0.0;
  Vec witness;
  std::vector<double> margins;  // per trajectory, when applicable
};

struct VerificationReport {
  std::vector<ReportSection> sections;

  bool pass() const;
  void merge(VerificationReport other);
  std::string to_text() const;
  // one "KIND: PASS|FAIL (stage ..., worst ...)" line per section
  std::string summary() const;
  // ignores any preamble before the version line (report files carry the
  // summary block first)
  static VerificationReport from_text(const std::string& text);
};

// margin per trajectory = max_t ||x(t)|| / (c e^{-lambda t} ||x(0)||);
// zero initial states give margin 0.
VerificationReport check_uges(const std::vector<Trajectory>& trajs, double c,
                              double lambda, double slack);

// margin = max_t ||x(t)|| / max{c e^{-lambda t}||x(0)||, alpha(sup_{s<=t}||d||)}
VerificationReport check_ises(const std::vector<Trajectory>& trajs,
                              const MonotoneScalarFn& alpha, double c, double lambda,
                              double slack);

// residual(t) = int_0^t ||x||^2 - ||x(0)||^2 - int_0^t ||v||^2; the state
// integral is trapezoidal on the report grid, the input integral is exact for
// piecewise-constant signals.  Pass iff max residual <= slack * (1 + ||x0||^2).
VerificationReport check_hinf(const std::vector<Trajectory>& trajs, double slack);

struct SampleBox {
  int count = 500;
  double r_min = 1e-3;
  double r_max = 1e3;
  double d_radius = 1.0;  // clipped to the system's disturbance ball
  std::uint64_t offset = 0;
};

// residual = <f~(y,d), y> + ||y||^2 per sample; pass iff all <= slack ||y||^2
VerificationReport check_contraction(const TransformedSystem& tsys,
                                     const SampleBox& sampler, double slack);

// on samples with ||y|| > alpha_tilde(||d||):
// residual = L_{f~} W(y) + W(y) <= slack * W(y); others are skipped + counted
VerificationReport check_gain_decay(const TransformedSystem& tsys,
                                    const std::function<double(const Vec&)>& W,
                                    const MonotoneScalarFn& alpha_tilde,
                                    const SampleBox& sampler, double slack);

struct DeltaOptions {
  int radii = 48;
  double r_min = 1e-3;
  double r_max = 1e3;
  int sphere_samples = 32;
  double shrink = 1e-3;  // safety against chord error of the envelope
};

// class-K-infinity delta with delta(||y||) <= ||T^{-1}(y)||: per-sphere min of
// the sampled inverse, then a lower monotone envelope
MonotoneScalarFn estimate_delta(const CoordinateChange& change,
                                const DeltaOptions& opt = {});

struct PipelineOptions {
  std::optional<MonotoneScalarFn> gamma_override;
  std::optional<MonotoneScalarFn> alpha4_override;
  double c = 1.0;
  double slack = 1e-3;
  double sim_tol = 1e-8;
  double t_end = 10.0;
  int trajectories = 100;
  int signals = 100;               // seeded disturbance signals
  double signal_amplitude = 1.0;   // clipped to the disturbance ball
  std::uint64_t seed = 1;
  double y0_min = 1e-3;
  double y0_max = 1e3;
  int contraction_samples = 500;
  int gain_samples = 2000;
  // constants the trajectory checks are run against; the construction always
  // targets c = lambda = 1, so anything stricter makes the check fail
  double check_c = 1.0;
  double check_lambda = 1.0;
};

struct UgesPipelineResult {
  MonotoneScalarFn alpha4, rho, gamma;
  CoordinateChange change;
  TransformedSystem tsys;
  std::vector<Trajectory> trajectories;
  VerificationReport report;
};

struct IsesPipelineResult {
  MonotoneScalarFn alpha4, rho, gamma, delta, alpha_tilde;
  CoordinateChange change;
  TransformedSystem tsys;
  std::vector<Trajectory> trajectories;
  VerificationReport report;
};

struct HinfPipelineResult {
  InputChange input;
  DisturbedSystem barred;  // f_bar(x, v) = f(x, R^{-1}(v))
  std::vector<Trajectory> trajectories;
  VerificationReport report;
};

// W = rho(V) with rho = make_rho(alpha4); change from W and gamma; contraction
// + UGES checks with c = lambda = 1 over seeded signals.
UgesPipelineResult pipeline_ugas_to_uges(const DisturbedSystem& system,
                                         const LyapunovCertificate& cert,
                                         const PipelineOptions& opt = {});

// as above with gain-conditioned decay; alpha_tilde = delta^{-1} o chi from
// the sampled lower bound delta on ||T^{-1}||; gain-decay + ISES checks.
IsesPipelineResult pipeline_iss_to_ises(const DisturbedSystem& system,
                                        const LyapunovCertificate& cert,
                                        const PipelineOptions& opt = {});

struct HinfOptions {
  double slack = 1e-3;
  double sim_tol = 1e-8;
  double t_end = 10.0;
  int trajectories = 50;
  double x0_min = 1e-2;
  double x0_max = 10.0;
  std::uint64_t seed = 1;
  double signal_amplitude = 1.0;
  int dissipation_samples = 2000;
  InputChangeOptions input;
};

// system must be ISES with c = lambda = 1 and gain alpha (typically the
// transformed system of pipeline_iss_to_ises together with its alpha_tilde)
HinfPipelineResult pipeline_ises_to_hinf(const DisturbedSystem& system,
                                         const MonotoneScalarFn& alpha,
                                         const HinfOptions& opt = {});

}  // namespace stab
