#include "stab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <sstream>

#include "stab/sampling.hpp"

namespace stab {

const char* spec_kind_name(SpecKind k) {
  switch (k) {
    case SpecKind::UGES: return "UGES";
    case SpecKind::IssMax: return "ISS-max";
    case SpecKind::ISES: return "ISES";
    case SpecKind::HINF: return "HINF";
    case SpecKind::Contraction: return "CONTRACTION";
    case SpecKind::GainDecay: return "GAIN-DECAY";
  }
  return "?";
}

SpecKind spec_kind_from_name(const std::string& name) {
  for (SpecKind k : {SpecKind::UGES, SpecKind::IssMax, SpecKind::ISES, SpecKind::HINF,
                     SpecKind::Contraction, SpecKind::GainDecay})
    if (name == spec_kind_name(k)) return k;
  raise(ErrorCode::ValidationError, "unknown stability spec kind '" + name + "'");
}

void StabilitySpec::validate() const {
  if (!(c >= 1.0)) raise(ErrorCode::ValidationError, "stability spec: c must be >= 1");
  if (!(lambda > 0.0))
    raise(ErrorCode::ValidationError, "stability spec: lambda must be > 0");
  if (!(slack >= 0.0))
    raise(ErrorCode::ValidationError, "stability spec: slack must be >= 0");
}

bool VerificationReport::pass() const {
  if (sections.empty()) return false;
  for (const auto& s : sections)
    if (!s.pass) return false;
  return true;
}

void VerificationReport::merge(VerificationReport other) {
  for (auto& s : other.sections) sections.push_back(std::move(s));
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string VerificationReport::to_text() const {
  std::ostringstream os;
  os << "report-version 1\n";
  for (const auto& s : sections) {
    os << "section " << s.stage << "\n";
    os << "kind " << spec_kind_name(s.spec.kind) << "\n";
    os << "c " << fmt(s.spec.c) << "\n";
    os << "lambda " << fmt(s.spec.lambda) << "\n";
    os << "alpha " << (s.alpha_label.empty() ? "-" : s.alpha_label) << "\n";
    os << "slack " << fmt(s.spec.slack) << "\n";
    os << "pass " << (s.pass ? 1 : 0) << "\n";
    os << "worst " << fmt(s.worst) << "\n";
    os << "samples " << s.samples << "\n";
    os << "skipped " << s.skipped << "\n";
    os << "witness_t " << fmt(s.witness_t) << "\n";
    os << "witness";
    for (double v : s.witness) os << " " << fmt(v);
    os << "\nmargins";
    for (double v : s.margins) os << " " << fmt(v);
    os << "\nend\n";
  }
  return os.str();
}

std::string VerificationReport::summary() const {
  std::ostringstream os;
  for (const auto& s : sections)
    os << spec_kind_name(s.spec.kind) << ": " << (s.pass ? "PASS" : "FAIL")
       << " (stage " << s.stage << ", worst " << s.worst << ")\n";
  return os.str();
}

VerificationReport VerificationReport::from_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  bool versioned = false;
  while (std::getline(is, line))
    if (line == "report-version 1") { versioned = true; break; }
  if (!versioned)
    raise(ErrorCode::ValidationError, "report: bad or missing version line");
  VerificationReport rep;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key, value;
    ls >> key;
    if (key != "section")
      raise(ErrorCode::ValidationError, "report: expected 'section', got '" + key + "'");
    ReportSection sec;
    ls >> sec.stage;
    bool ended = false;
    while (!ended && std::getline(is, line)) {
      std::istringstream fs(line);
      fs >> key;
      if (key == "end") { ended = true; }
      else if (key == "kind") { fs >> value; sec.spec.kind = spec_kind_from_name(value); }
      else if (key == "c") fs >> sec.spec.c;
      else if (key == "lambda") fs >> sec.spec.lambda;
      else if (key == "alpha") { fs >> value; sec.alpha_label = value == "-" ? "" : value; }
      else if (key == "slack") fs >> sec.spec.slack;
      else if (key == "pass") { int p = 0; fs >> p; sec.pass = p != 0; }
      else if (key == "worst") fs >> sec.worst;
      else if (key == "samples") fs >> sec.samples;
      else if (key == "skipped") fs >> sec.skipped;
      else if (key == "witness_t") fs >> sec.witness_t;
      else if (key == "witness") { double v; while (fs >> v) sec.witness.push_back(v); }
      else if (key == "margins") { double v; while (fs >> v) sec.margins.push_back(v); }
      else raise(ErrorCode::ValidationError, "report: unknown field '" + key + "'");
    }
    if (!ended) raise(ErrorCode::ValidationError, "report: unterminated section");
    rep.sections.push_back(std::move(sec));
  }
  return rep;
}

VerificationReport check_uges(const std::vector<Trajectory>& trajs, double c,
                              double lambda, double slack) {
  StabilitySpec spec{SpecKind::UGES, c, lambda, {}, slack};
  spec.validate();
  ReportSection sec;
  sec.stage = "uges";
  sec.spec = spec;
  sec.pass = true;
  for (const auto& tr : trajs) {
    const double n0 = norm(tr.states.at(0));
    double margin = 0.0;
    if (n0 > 0.0) {
      for (std::size_t k = 0; k < tr.times.size(); ++k) {
        const double allowed = c * std::exp(-lambda * tr.times[k]) * n0;
        const double m = norm(tr.states[k]) / allowed;
        if (m > margin) margin = m;
        if (m > sec.worst) {
          sec.worst = m;
          sec.witness = tr.states[k];
          sec.witness_t = tr.times[k];
        }
      }
    }
    sec.margins.push_back(margin);
    if (margin > 1.0 + slack) sec.pass = false;
    ++sec.samples;
  }
  VerificationReport rep;
  rep.sections.push_back(std::move(sec));
  return rep;
}

VerificationReport check_ises(const std::vector<Trajectory>& trajs,
                              const MonotoneScalarFn& alpha, double c, double lambda,
                              double slack) {
  StabilitySpec spec{SpecKind::ISES, c, lambda, alpha, slack};
  spec.validate();
  if (!(alpha(1.0) > 0.0) || !(alpha(2.0) > alpha(1.0)))
    raise(ErrorCode::ValidationError, "check_ises: alpha is not class K-infinity");
  ReportSection sec;
  sec.stage = "ises";
  sec.spec = spec;
  sec.alpha_label = alpha.label().empty() ? "alpha" : alpha.label();
  sec.pass = true;
  for (const auto& tr : trajs) {
    if (!tr.input) raise(ErrorCode::MissingSignal, "check_ises: trajectory has no signal");
    const double n0 = norm(tr.states.at(0));
    double margin = 0.0;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      const double nx = norm(tr.states[k]);
      const double sup_d = tr.input->sup_norm(tr.times[k]);
      const double allowed = std::max(c * std::exp(-lambda * tr.times[k]) * n0,
                                      sup_d > 0.0 ? alpha(sup_d) : 0.0);
      const double m = allowed > 0.0 ? nx / allowed : (nx > 0.0 ? HUGE_VAL : 0.0);
      if (m > margin) margin = m;
      if (m > sec.worst) {
        sec.worst = m;
        sec.witness = tr.states[k];
        sec.witness_t = tr.times[k];
      }
    }
    sec.margins.push_back(margin);
    if (margin > 1.0 + slack) sec.pass = false;
    ++sec.samples;
  }
  VerificationReport rep;
  rep.sections.push_back(std::move(sec));
  return rep;
}

namespace {

// exact integral of ||v(s)||^2 over [0, t] for a piecewise-constant signal
double signal_energy(const DisturbanceSignal& sig, double t) {
  double acc = 0.0, t_prev = 0.0;
  for (std::size_t i = 0; i < sig.switch_times.size(); ++i) {
    const double ts = std::min(sig.switch_times[i], t);
    if (ts <= t_prev) break;
    acc += (ts - t_prev) * dot(sig.values[i], sig.values[i]);
    t_prev = ts;
  }
  if (t > t_prev) {
    const Vec& last = sig.at(t_prev);
    acc += (t - t_prev) * dot(last, last);
  }
  return acc;
}

}  // namespace

VerificationReport check_hinf(const std::vector<Trajectory>& trajs, double slack) {
  StabilitySpec spec{SpecKind::HINF, 1.0, 1.0, {}, slack};
  spec.validate();
  ReportSection sec;
  sec.stage = "hinf";
  sec.spec = spec;
  sec.pass = true;
  sec.worst = -HUGE_VAL;
  for (const auto& tr : trajs) {
    if (!tr.input) raise(ErrorCode::MissingSignal, "check_hinf: trajectory has no signal");
    const double n0sq = dot(tr.states.at(0), tr.states.at(0));
    double ix2 = 0.0;
    double worst = -HUGE_VAL;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      if (k > 0) {
        const double dt = tr.times[k] - tr.times[k - 1];
        ix2 += 0.5 * dt * (dot(tr.states[k - 1], tr.states[k - 1])
                           + dot(tr.states[k], tr.states[k]));
      }
      const double residual = ix2 - n0sq - signal_energy(*tr.input, tr.times[k]);
      const double normalized = residual / (1.0 + n0sq);
      if (normalized > worst) worst = normalized;
      if (normalized > sec.worst) {
        sec.worst = normalized;
        sec.witness = tr.states[k];
        sec.witness_t = tr.times[k];
      }
    }
    sec.margins.push_back(worst);
    if (worst > slack) sec.pass = false;
    ++sec.samples;
  }
  VerificationReport rep;
  rep.sections.push_back(std::move(sec));
  return rep;
}

namespace {

// (y, d) samples: log-spaced ||y|| over [r_min, r_max], d in the ball
struct PairSampler {
  LowDiscrepancySeq seq;
  std::size_t n, m;
  double r_min, r_max, d_rad;

  PairSampler(std::size_t n_, std::size_t m_, const SampleBox& box, double sys_radius)
      : seq(n_ + 1 + (m_ > 0 ? m_ + 1 : 0), box.offset), n(n_), m(m_),
        r_min(box.r_min), r_max(box.r_max),
        d_rad(std::isfinite(sys_radius) ? std::min(box.d_radius, sys_radius)
                                        : box.d_radius) {}

  std::pair<Vec, Vec> next() {
    const Vec u = seq.next();
    Vec y = sphere_from_unit(u.data(), n);
    y = scaled(y, r_min * std::pow(r_max / r_min, u[n]));
    Vec d = m > 0 ? ball_from_unit(u.data() + n + 1, m, d_rad) : Vec{};
    return {std::move(y), std::move(d)};
  }
};

}  // namespace

VerificationReport check_contraction(const TransformedSystem& tsys,
                                     const SampleBox& sampler, double slack) {
  ReportSection sec;
  sec.stage = "contraction";
  sec.spec = StabilitySpec{SpecKind::Contraction, 1.0, 1.0, {}, slack};
  sec.pass = true;
  sec.worst = -HUGE_VAL;
  PairSampler ps(tsys.base.dim_x, tsys.base.dim_d, sampler,
                 tsys.base.disturbance_radius);
  for (int k = 0; k < sampler.count; ++k) {
    auto [y, d] = ps.next();
    const double y2 = dot(y, y);
    const double residual = dot(tsys.rhs(y, d), y) + y2;
    const double normalized = residual / y2;
    if (normalized > sec.worst) {
      sec.worst = normalized;
      sec.witness = y;
    }
    if (residual > slack * y2) sec.pass = false;
    ++sec.samples;
  }
  VerificationReport rep;
  rep.sections.push_back(std::move(sec));
  return rep;
}

VerificationReport check_gain_decay(const TransformedSystem& tsys,
                                    const std::function<double(const Vec&)>& W,
                                    const MonotoneScalarFn& alpha_tilde,
                                    const SampleBox& sampler, double slack) {
  ReportSection sec;
  sec.stage = "gain_decay";
  sec.spec = StabilitySpec{SpecKind::GainDecay, 1.0, 1.0, alpha_tilde, slack};
  sec.alpha_label = alpha_tilde.label().empty() ? "alpha_tilde" : alpha_tilde.label();
  sec.pass = true;
  sec.worst = -HUGE_VAL;
  PairSampler ps(tsys.base.dim_x, tsys.base.dim_d, sampler,
                 tsys.base.disturbance_radius);
  for (int k = 0; k < sampler.count; ++k) {
    auto [y, d] = ps.next();
    ++sec.samples;
    if (norm(y) <= alpha_tilde(norm(d))) {
      ++sec.skipped;
      continue;
    }
    const double wy = W(y);
    // L_{f~} W by central differences along f~
    const Vec f = tsys.rhs(y, d);
    const double nf = norm(f), ny = norm(y);
    double lw = 0.0;
    if (nf > 0.0) {
      double h = 1e-6 * std::max(1.0, ny) / nf;
      h = std::min(h, 0.5 * ny / nf);
      Vec yp(y), ym(y);
      axpy(h, f, yp);
      axpy(-h, f, ym);
      lw = (W(yp) - W(ym)) / (2.0 * h);
    }
    const double residual = lw + wy;
    const double normalized = residual / wy;
    if (normalized > sec.worst) {
      sec.worst = normalized;
      sec.witness = y;
    }
    if (residual > slack * wy) sec.pass = false;
  }
  VerificationReport rep;
  rep.sections.push_back(std::move(sec));
  return rep;
}

MonotoneScalarFn estimate_delta(const CoordinateChange& change,
                                const DeltaOptions& opt) {
  std::vector<std::pair<double, double>> samples;
  const auto dirs = sphere_points(change.dim, opt.sphere_samples);
  for (double r : log_grid(opt.r_min, opt.r_max, opt.radii)) {
    double mn = HUGE_VAL;
    for (const auto& u : dirs) mn = std::min(mn, norm(change.inverse(scaled(u, r))));
    samples.emplace_back(r, (1.0 - opt.shrink) * mn);
  }
  auto d = monotone_envelope(std::move(samples), EnvelopeSide::Lower);
  return MonotoneScalarFn([d](double s) { return d(s); },
                          [d](double s) { return d.deriv(s); },
                          MonotoneScalarFn::Tag::KInf, {}, "delta");
}

namespace {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage ") + name + ": " + e.what(),
                Error::Verbatim{});
  }
}

MonotoneScalarFn bound_from_samples(const LyapunovCertificate& cert,
                                    EnvelopeSide side) {
  std::vector<std::pair<double, double>> samples;
  const auto dirs = sphere_points(cert.dim, 32);
  for (double r : log_grid(1e-4, 1e3, 48)) {
    double v = side == EnvelopeSide::Lower ? HUGE_VAL : 0.0;
    for (const auto& u : dirs) {
      const double w = cert.V(scaled(u, r));
      v = side == EnvelopeSide::Lower ? std::min(v, w) : std::max(v, w);
    }
    samples.emplace_back(r, v);
  }
  return monotone_envelope(std::move(samples), side);
}

LyapunovCertificate ensure_bounds(LyapunovCertificate cert) {
  if (!cert.bounds)
    cert.bounds = LyapunovCertificate::Bounds{bound_from_samples(cert, EnvelopeSide::Lower),
                                              bound_from_samples(cert, EnvelopeSide::Upper)};
  return cert;
}

// sampled admissibility of an alpha4 override: L_f V <= -alpha4(V) wherever
// the decay hypothesis applies (everywhere for UGAS, ||x|| > chi(||d||) for ISS)
void check_alpha4_override(const DisturbedSystem& system,
                           const LyapunovCertificate& cert,
                           const MonotoneScalarFn& alpha4, bool gain_conditioned) {
  LowDiscrepancySeq seq(system.dim_x + 1 + (system.dim_d > 0 ? system.dim_d + 1 : 0));
  const double d_rad = std::isfinite(system.disturbance_radius)
                           ? system.disturbance_radius : 1.0;
  for (int k = 0; k < 2000; ++k) {
    const Vec u = seq.next();
    Vec x = sphere_from_unit(u.data(), system.dim_x);
    x = scaled(x, 1e-3 * std::pow(1e6, u[system.dim_x]));
    const Vec d = system.dim_d > 0
                      ? ball_from_unit(u.data() + system.dim_x + 1, system.dim_d, d_rad)
                      : Vec{};
    if (gain_conditioned && !(norm(x) > cert.iss_gain->chi(norm(d)))) continue;
    const double lv = dot(cert.gradient(x), system.rhs(x, d));
    const double a4 = alpha4(cert.V(x));
    if (lv > -a4 * (1.0 - 1e-9) + 1e-12)
      raise(ErrorCode::ValidationError,
            "alpha4 override not admissible: L_f V > -alpha4(V) at a sample");
  }
}

struct WConstruction {
  MonotoneScalarFn alpha4, rho;
  LyapunovCertificate w_cert;
  double r_lo = 1e-3, r_hi = 1e3;  // x-annulus where W is representable
};

WConstruction build_w(const DisturbedSystem& system, const LyapunovCertificate& cert0,
                      const PipelineOptions& opt, bool gain_conditioned) {
  WConstruction out;
  const LyapunovCertificate cert = stage("bounds", [&] { return ensure_bounds(cert0); });

  out.alpha4 = stage("alpha4", [&] {
    if (opt.alpha4_override) {
      check_alpha4_override(system, cert, *opt.alpha4_override, gain_conditioned);
      return *opt.alpha4_override;
    }
    const MonotoneScalarFn& a1 =
        gain_conditioned ? cert.iss_gain->alpha1
                         : (cert.alpha1 ? *cert.alpha1
                                        : (raise(ErrorCode::ValidationError,
                                                 "certificate lacks a decay rate"),
                                           MonotoneScalarFn()));
    return make_alpha4(a1, cert.bounds->alpha3);
  });
  out.rho = stage("rho", [&] { return make_rho(out.alpha4); });

  const MonotoneScalarFn rho = out.rho;
  const auto V = cert.V;
  const auto grad = [cert](const Vec& x) { return cert.gradient(x); };
  out.w_cert.dim = cert.dim;
  out.w_cert.V = [rho, V](const Vec& x) { return rho(V(x)); };
  out.w_cert.grad_V = [rho, V, grad](const Vec& x) {
    return scaled(grad(x), rho.deriv(V(x)));
  };
  out.w_cert.bounds = LyapunovCertificate::Bounds{
      MonotoneScalarFn::compose(rho, cert.bounds->alpha2),
      MonotoneScalarFn::compose(rho, cert.bounds->alpha3)};
  out.w_cert.iss_gain = cert.iss_gain;

  // clip the x-annulus so W = rho(V) stays within double range
  auto representable = [&](double r) {
    try {
      const double lo = out.w_cert.bounds->alpha2(r), hi = out.w_cert.bounds->alpha3(r);
      return lo > 1e-100 && hi < 1e100 && std::isfinite(lo) && std::isfinite(hi);
    } catch (const Error&) {
      return false;
    }
  };
  while (out.r_hi > 2.0 && !representable(out.r_hi)) out.r_hi *= 0.5;
  while (out.r_lo < 0.5 && !representable(out.r_lo)) out.r_lo *= 2.0;
  if (!(out.r_lo < 0.25 * out.r_hi))
    raise(ErrorCode::EnvelopeFailure,
          "stage rho: rho(V) leaves double range on every usable annulus");
  return out;
}

MonotoneScalarFn pick_gamma(const WConstruction& w, const PipelineOptions& opt) {
  if (opt.gamma_override) return *opt.gamma_override;
  return stage("gamma", [&] {
    const double s_lo = std::max(1e-8, 2.0 * w.w_cert.bounds->alpha2(w.r_lo));
    const double s_hi = w.w_cert.bounds->alpha3(w.r_hi);
    GammaOptions gopt;
    gopt.level_min = s_lo;
    auto L = [&w, &opt](double s) {
      GradientFlowConfig cfg;
      return estimate_L(w.w_cert, opt.c, s, 16, cfg);
    };
    return make_gamma(L, s_hi, gopt);
  });
}

std::vector<Trajectory> run_batch(const DisturbedSystem& sys, const PipelineOptions& opt,
                                  double y_min, double y_max) {
  std::vector<Trajectory> trajs;
  const int n_traj = std::max(1, opt.trajectories);
  const auto dirs = sphere_points(sys.dim_x, n_traj);
  const double amp = std::isfinite(sys.disturbance_radius)
                         ? std::min(opt.signal_amplitude, sys.disturbance_radius)
                         : opt.signal_amplitude;
  for (int i = 0; i < n_traj; ++i) {
    const double r = n_traj > 1
                         ? y_min * std::pow(y_max / y_min, double(i) / double(n_traj - 1))
                         : y_max;
    const Vec y0 = scaled(dirs[i], r);
    DisturbanceSignal sig;
    if (sys.dim_d > 0 && opt.signals > 0) {
      DisturbanceSpec dspec;
      dspec.dim_d = sys.dim_d;
      // amplitudes log-spaced within the disturbance set
      dspec.amplitude =
          amp * std::pow(1e-2, 1.0 - double(i % opt.signals) / double(std::max(1, opt.signals - 1)));
      sig = make_disturbance(dspec, opt.t_end, opt.seed + std::uint64_t(i));
    } else {
      sig = DisturbanceSignal::zero(sys.dim_d);
    }
    trajs.push_back(simulate(sys, y0, sig, opt.t_end, opt.sim_tol));
  }
  return trajs;
}

}  // namespace

UgesPipelineResult pipeline_ugas_to_uges(const DisturbedSystem& system,
                                         const LyapunovCertificate& cert,
                                         const PipelineOptions& opt) {
  UgesPipelineResult res;
  stage("certificate", [&] {
    auto diag = check_certificate(cert);
    if (!diag.pass())
      raise(ErrorCode::ValidationError, "certificate rejected:\n" + diag.to_text());
    return 0;
  });
  WConstruction w = build_w(system, cert, opt, /*gain_conditioned=*/false);
  res.alpha4 = w.alpha4;
  res.rho = w.rho;
  res.gamma = pick_gamma(w, opt);
  res.change = stage("change", [&] {
    ChangeOptions copt;
    return build_change(w.w_cert, res.gamma, opt.c, copt);
  });
  res.tsys = stage("pushforward", [&] { return pushforward(system, res.change); });

  // y-range matching the representable W annulus
  const double y_lo = std::max(opt.y0_min, res.gamma.inverse(2.0 * w.w_cert.bounds->alpha2(w.r_lo)));
  const double y_hi = std::min(opt.y0_max, res.gamma.inverse(0.5 * w.w_cert.bounds->alpha3(w.r_hi)));

  res.report = stage("contraction", [&] {
    SampleBox box;
    box.count = opt.contraction_samples;
    box.r_min = y_lo;
    box.r_max = y_hi;
    box.d_radius = opt.signal_amplitude;
    return check_contraction(res.tsys, box, opt.slack);
  });
  res.report.merge(stage("uges", [&] {
    res.trajectories = run_batch(res.tsys.as_system(), opt, y_lo, y_hi);
    return check_uges(res.trajectories, opt.check_c, opt.check_lambda, opt.slack);
  }));
  return res;
}

IsesPipelineResult pipeline_iss_to_ises(const DisturbedSystem& system,
                                        const LyapunovCertificate& cert,
                                        const PipelineOptions& opt) {
  if (!cert.iss_gain)
    raise(ErrorCode::ValidationError,
          "stage certificate: ISS pipeline needs an iss_gain (chi, alpha1)");
  IsesPipelineResult res;
  stage("certificate", [&] {
    auto diag = check_certificate(cert);
    if (!diag.pass())
      raise(ErrorCode::ValidationError, "certificate rejected:\n" + diag.to_text());
    return 0;
  });
  WConstruction w = build_w(system, cert, opt, /*gain_conditioned=*/true);
  res.alpha4 = w.alpha4;
  res.rho = w.rho;
  res.gamma = pick_gamma(w, opt);
  res.change = stage("change", [&] {
    ChangeOptions copt;
    return build_change(w.w_cert, res.gamma, opt.c, copt);
  });
  res.tsys = stage("pushforward", [&] { return pushforward(system, res.change); });

  const double y_lo = std::max(opt.y0_min, res.gamma.inverse(2.0 * w.w_cert.bounds->alpha2(w.r_lo)));
  const double y_hi = std::min(opt.y0_max, res.gamma.inverse(0.5 * w.w_cert.bounds->alpha3(w.r_hi)));

  res.delta = stage("delta", [&] {
    DeltaOptions dopt;
    dopt.r_min = y_lo;
    dopt.r_max = y_hi;
    return estimate_delta(res.change, dopt);
  });
  res.alpha_tilde = stage("alpha_tilde", [&] {
    const MonotoneScalarFn delta = res.delta;
    const MonotoneScalarFn chi = cert.iss_gain->chi;
    return MonotoneScalarFn([delta, chi](double r) { return delta.inverse(chi(r)); },
                            {}, MonotoneScalarFn::Tag::KInf, {}, "alpha_tilde");
  });

  res.report = stage("gain_decay", [&] {
    const MonotoneScalarFn gamma = res.gamma;
    SampleBox box;
    box.count = opt.gain_samples;
    box.r_min = y_lo;
    box.r_max = y_hi;
    box.d_radius = opt.signal_amplitude;
    return check_gain_decay(res.tsys, [gamma](const Vec& y) { return gamma(norm(y)); },
                            res.alpha_tilde, box, opt.slack);
  });
  res.report.merge(stage("ises", [&] {
    res.trajectories = run_batch(res.tsys.as_system(), opt, y_lo, y_hi);
    return check_ises(res.trajectories, res.alpha_tilde, opt.check_c,
                      opt.check_lambda, opt.slack);
  }));
  return res;
}

HinfPipelineResult pipeline_ises_to_hinf(const DisturbedSystem& system,
                                         const MonotoneScalarFn& alpha,
                                         const HinfOptions& opt) {
  if (system.dim_d == 0)
    raise(ErrorCode::ValidationError,
          "stage input_change: H-inf pipeline needs a disturbance channel");
  HinfPipelineResult res;
  res.input = stage("input_change", [&] {
    InputChangeOptions io = opt.input;
    if (!io.alpha_tilde_override && std::isfinite(system.disturbance_radius))
      io.r_max = std::min(io.r_max, system.disturbance_radius);
    return input_change(system, alpha, io);
  });

  const auto f = system.rhs;
  const auto r_inv = res.input.inverse;
  // the signals feeding f_bar are piecewise constant, so only a handful of
  // distinct v values show up per run; R^{-1} hides a bracketed inversion and
  // is far too slow to call at every integrator stage
  auto memo = std::make_shared<std::map<Vec, Vec>>();
  res.barred.rhs = [f, r_inv, memo](const Vec& x, const Vec& v) {
    auto it = memo->find(v);
    if (it == memo->end()) it = memo->emplace(v, r_inv(v)).first;
    return f(x, it->second);
  };
  res.barred.dim_x = system.dim_x;
  res.barred.dim_d = system.dim_d;
  res.barred.name = system.name + "_bar";

  res.report = stage("dissipation", [&] {
    ReportSection sec;
    sec.stage = "dissipation";
    sec.spec = StabilitySpec{SpecKind::GainDecay, 1.0, 1.0, res.input.alpha_tilde,
                             opt.slack};
    sec.alpha_label = "alpha_tilde";
    sec.pass = true;
    sec.worst = -HUGE_VAL;
    const double d_rad = std::isfinite(system.disturbance_radius)
                             ? std::min(opt.signal_amplitude, system.disturbance_radius)
                             : opt.signal_amplitude;
    LowDiscrepancySeq seq(system.dim_x + 1 + system.dim_d + 1, opt.seed % 97);
    for (int k = 0; k < opt.dissipation_samples; ++k) {
      const Vec u = seq.next();
      Vec x = sphere_from_unit(u.data(), system.dim_x);
      x = scaled(x, opt.x0_min * std::pow(opt.x0_max / opt.x0_min, u[system.dim_x]));
      const Vec d = ball_from_unit(u.data() + system.dim_x + 1, system.dim_d, d_rad);
      const Vec v = res.input.forward(d);
      // L_{f_bar} W + W - ||v||^2 with W = ||x||^2
      const double residual =
          2.0 * dot(system.rhs(x, d), x) + dot(x, x) - dot(v, v);
      const double scale = 1.0 + dot(x, x) + dot(v, v);
      if (residual / scale > sec.worst) {
        sec.worst = residual / scale;
        sec.witness = x;
      }
      if (residual > opt.slack * scale) sec.pass = false;
      ++sec.samples;
    }
    VerificationReport rep;
    rep.sections.push_back(std::move(sec));
    return rep;
  });

  res.report.merge(stage("hinf", [&] {
    std::vector<Trajectory>& trajs = res.trajectories;
    const int n_traj = std::max(1, opt.trajectories);
    const auto dirs = sphere_points(system.dim_x, n_traj);
    const double amp = std::isfinite(system.disturbance_radius)
                           ? std::min(opt.signal_amplitude, system.disturbance_radius)
                           : opt.signal_amplitude;
    for (int i = 0; i < n_traj; ++i) {
      const double r = n_traj > 1 ? opt.x0_min * std::pow(opt.x0_max / opt.x0_min,
                                                          double(i) / double(n_traj - 1))
                                  : opt.x0_max;
      DisturbanceSpec dspec;
      dspec.dim_d = system.dim_d;
      dspec.amplitude = amp * std::pow(1e-2, 1.0 - double(i) / double(std::max(1, n_traj - 1)));
      DisturbanceSignal d_sig = make_disturbance(dspec, opt.t_end, opt.seed + std::uint64_t(i));
      DisturbanceSignal v_sig = d_sig;
      for (auto& val : v_sig.values) val = res.input.forward(val);
      trajs.push_back(simulate(res.barred, scaled(dirs[i], r), v_sig, opt.t_end,
                               opt.sim_tol));
    }
    return check_hinf(trajs, opt.slack);
  }));
  return res;
}

}  // namespace stab
