#include "stab/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "stab/expr.hpp"
#include "stab/sampling.hpp"
#include "stab/verify.hpp"

namespace stab {

namespace {

namespace fs = std::filesystem;

enum class Pipeline { UgasToUges, IssToIses, IsesToHinf, FlowNorm };

Pipeline pipeline_from_name(const std::string& name) {
  if (name == "ugas2uges") return Pipeline::UgasToUges;
  if (name == "iss2ises") return Pipeline::IssToIses;
  if (name == "ises2hinf") return Pipeline::IsesToHinf;
  if (name == "flownorm") return Pipeline::FlowNorm;
  raise(ErrorCode::ConfigError, "config: unknown pipeline '" + name + "'");
}

struct Job {
  Pipeline pipeline;
  DisturbedSystem system;
  LyapunovCertificate cert;
  PipelineOptions opt;
  HinfOptions hinf;
  fs::path out_dir;
};

void check_known_keys(const ConfigFile& cfg, const std::string& section,
                      const std::set<std::string>& allowed, bool rhs_pattern = false) {
  for (const auto& key : cfg.keys(section)) {
    if (allowed.count(key)) continue;
    if (rhs_pattern && key.rfind("rhs", 0) == 0 &&
        key.find_first_not_of("0123456789", 3) == std::string::npos && key.size() > 3)
      continue;
    raise(ErrorCode::ConfigError,
          "config: unknown key '" + key + "' in [" + section + "]");
  }
}

MonotoneScalarFn scalar_fn_from_text(const std::string& raw, const std::string& label) {
  const Expr e = parse_expr(raw);
  if (e.max_d() > 0 || e.max_x() > 1)
    raise(ErrorCode::ConfigError,
          "config: scalar function '" + label + "' may only use the variable s");
  return MonotoneScalarFn([e](double s) { return e.eval(s); }, {},
                          MonotoneScalarFn::Tag::KInf, {}, label);
}

std::optional<MonotoneScalarFn> resolve_override(
    const ConfigFile& cfg, const std::string& key,
    const std::optional<MonotoneScalarFn>& suggested) {
  if (!cfg.has("overrides", key)) return std::nullopt;
  const std::string raw = cfg.get_string("overrides", key);
  if (raw == "identity") return MonotoneScalarFn::identity();
  if (raw == "suggested") {
    if (!suggested)
      raise(ErrorCode::ConfigError,
            "config: no suggested " + key + " for this system");
    return suggested;
  }
  return scalar_fn_from_text(raw, key);
}

void load_problem(const ConfigFile& cfg, Job& job) {
  std::optional<MonotoneScalarFn> suggested_gamma, suggested_alpha4;
  bool have_cert = false;

  if (cfg.has("system", "name")) {
    check_known_keys(cfg, "system", {"name"});
    const CatalogEntry* entry = nullptr;
    const std::string name = cfg.get_string("system", "name");
    for (const auto& e : catalog())
      if (e.name == name) entry = &e;
    if (!entry) raise(ErrorCode::ConfigError, "config: no catalog system '" + name + "'");
    job.system = entry->system;
    job.cert = entry->cert;
    suggested_gamma = entry->suggested_gamma;
    suggested_alpha4 = entry->suggested_alpha4;
    have_cert = true;
  } else {
    check_known_keys(cfg, "system", {"dim_x", "dim_d", "radius"}, /*rhs_pattern=*/true);
    const long n = cfg.get_int("system", "dim_x", 0);
    const long m = cfg.get_int("system", "dim_d", 0);
    if (n <= 0) raise(ErrorCode::ConfigError, "config: [system] needs name or dim_x");
    if (m < 0) raise(ErrorCode::ConfigError, "config: dim_d must be >= 0");
    std::vector<Expr> rhs;
    for (long i = 1; i <= n; ++i) {
      const std::string key = "rhs" + std::to_string(i);
      if (!cfg.has("system", key))
        raise(ErrorCode::ConfigError, "config: missing [system] " + key);
      Expr e = parse_expr(cfg.get_string("system", key));
      if (e.max_x() > std::size_t(n) || e.max_d() > std::size_t(m))
        raise(ErrorCode::ConfigError,
              "config: " + key + " references a variable beyond dim_x/dim_d");
      rhs.push_back(std::move(e));
    }
    job.system.dim_x = std::size_t(n);
    job.system.dim_d = std::size_t(m);
    job.system.disturbance_radius =
        cfg.get_double("system", "radius", m > 0 ? HUGE_VAL : 0.0);
    job.system.name = "inline";
    job.system.rhs = [rhs](const Vec& x, const Vec& d) {
      Vec out(rhs.size());
      for (std::size_t i = 0; i < rhs.size(); ++i) out[i] = rhs[i].eval(x, d);
      return out;
    };
  }

  if (cfg.has_section("certificate")) {
    check_known_keys(cfg, "certificate", {"V", "chi", "alpha1"});
    if (cfg.has("certificate", "V")) {
      const Expr v = parse_expr(cfg.get_string("certificate", "V"));
      if (v.max_d() > 0 || v.max_x() > job.system.dim_x)
        raise(ErrorCode::ConfigError,
              "config: V references a variable beyond dim_x");
      LyapunovCertificate cert;
      cert.dim = job.system.dim_x;
      cert.V = [v](const Vec& x) { return v.eval(x, {}); };
      job.cert = std::move(cert);
      have_cert = true;
      suggested_gamma.reset();
      suggested_alpha4.reset();
    }
    if (cfg.has("certificate", "alpha1"))
      job.cert.alpha1 =
          scalar_fn_from_text(cfg.get_string("certificate", "alpha1"), "alpha1");
    if (cfg.has("certificate", "chi")) {
      if (!job.cert.alpha1)
        raise(ErrorCode::ConfigError, "config: chi needs alpha1 alongside it");
      job.cert.iss_gain = LyapunovCertificate::IssGain{
          scalar_fn_from_text(cfg.get_string("certificate", "chi"), "chi"),
          *job.cert.alpha1};
    }
  }
  if (!have_cert)
    raise(ErrorCode::ConfigError, "config: inline system needs a [certificate]");

  job.opt.gamma_override = resolve_override(cfg, "gamma", suggested_gamma);
  job.opt.alpha4_override = resolve_override(cfg, "alpha4", suggested_alpha4);
}

Job configure(const ConfigFile& cfg, const RunOverrides& ov) {
  check_known_keys(cfg, "run",
                   {"pipeline", "out", "seed", "tol", "signals", "trajectories",
                    "t_end", "slack", "amplitude", "c", "samples"});
  check_known_keys(cfg, "overrides", {"gamma", "alpha4"});
  check_known_keys(cfg, "check", {"lambda", "c"});

  Job job;
  job.pipeline = pipeline_from_name(cfg.get_string("run", "pipeline"));
  load_problem(cfg, job);

  PipelineOptions& opt = job.opt;
  opt.seed = ov.seed ? *ov.seed : cfg.get_uint("run", "seed", 1);
  opt.sim_tol = ov.tol ? *ov.tol : cfg.get_double("run", "tol", 1e-8);
  opt.signals = ov.signals ? *ov.signals : int(cfg.get_int("run", "signals", 100));
  opt.trajectories = int(cfg.get_int("run", "trajectories", 100));
  opt.t_end = cfg.get_double("run", "t_end", 10.0);
  opt.slack = cfg.get_double("run", "slack", 1e-3);
  opt.signal_amplitude = cfg.get_double("run", "amplitude", 1.0);
  opt.c = cfg.get_double("run", "c", 1.0);
  opt.check_lambda = cfg.get_double("check", "lambda", 1.0);
  opt.check_c = cfg.get_double("check", "c", 1.0);
  if (cfg.has("run", "samples")) {
    const long s = cfg.get_int("run", "samples", 0);
    if (s < 1) raise(ErrorCode::ConfigError, "config: samples must be >= 1");
    opt.contraction_samples = opt.gain_samples = int(s);
    job.hinf.dissipation_samples = int(s);
  }
  if (!(opt.sim_tol > 0.0) || !(opt.t_end > 0.0) || opt.trajectories < 1 ||
      opt.signals < 0 || !(opt.slack >= 0.0) || !(opt.check_lambda > 0.0) ||
      !(opt.check_c >= 1.0))
    raise(ErrorCode::ConfigError, "config: [run]/[check] value out of range");

  job.hinf.slack = opt.slack;
  job.hinf.sim_tol = opt.sim_tol;
  job.hinf.t_end = opt.t_end;
  job.hinf.seed = opt.seed;
  job.hinf.signal_amplitude = opt.signal_amplitude;
  job.hinf.trajectories = std::min(opt.trajectories, 50);

  // pipeline-compatible certificate fields
  switch (job.pipeline) {
    case Pipeline::UgasToUges:
      if (!job.cert.alpha1 && !opt.alpha4_override)
        raise(ErrorCode::ConfigError,
              "config: pipeline needs a decay rate (certificate alpha1 or an "
              "alpha4 override)");
      break;
    case Pipeline::IssToIses:
    case Pipeline::IsesToHinf:
      if (!job.cert.iss_gain)
        raise(ErrorCode::ConfigError,
              "config: pipeline needs a certificate with iss_gain (chi, alpha1)");
      if (job.system.dim_d == 0)
        raise(ErrorCode::ConfigError,
              "config: pipeline needs a system with a disturbance channel");
      break;
    case Pipeline::FlowNorm:
      if (job.system.dim_d != 0)
        raise(ErrorCode::ConfigError,
              "config: flownorm needs a disturbance-free system");
      break;
  }

  job.out_dir = ov.out_dir ? *ov.out_dir : cfg.get_string("run", "out", "out");
  std::error_code ec;
  fs::create_directories(job.out_dir / "trajectories", ec);
  if (ec || !fs::is_directory(job.out_dir))
    raise(ErrorCode::ConfigError,
          "config: output directory '" + job.out_dir.string() + "' is not writable");
  return job;
}

void write_change_table(const fs::path& path,
                        const std::vector<std::tuple<std::string, Vec, Vec>>& rows,
                        const char* in_prefix, const char* out_prefix,
                        std::size_t dim) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) raise(ErrorCode::IoError, "cannot open " + path.string());
  std::fprintf(f, "map");
  for (std::size_t i = 1; i <= dim; ++i) std::fprintf(f, ",%s%zu", in_prefix, i);
  for (std::size_t i = 1; i <= dim; ++i) std::fprintf(f, ",%s%zu", out_prefix, i);
  std::fprintf(f, "\n");
  for (const auto& [name, in, out] : rows) {
    std::fprintf(f, "%s", name.c_str());
    for (double v : in) std::fprintf(f, ",%.17g", v);
    for (double v : out) std::fprintf(f, ",%.17g", v);
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

std::vector<std::tuple<std::string, Vec, Vec>> sample_state_change(
    const CoordinateChange& change) {
  std::vector<std::tuple<std::string, Vec, Vec>> rows;
  const auto dirs = sphere_points(change.dim, 8);
  for (const auto& u : dirs) {
    for (double r : log_grid(1e-2, 10.0, 16)) {
      const Vec x = scaled(u, r);
      // rows that leave the certified annulus are skipped, not fatal
      try {
        rows.emplace_back("T", x, change.forward(x));
      } catch (const Error&) {}
      try {
        rows.emplace_back("Tinv", x, change.inverse(x));
      } catch (const Error&) {}
    }
  }
  return rows;
}

void write_trajectories(const fs::path& dir, const std::vector<Trajectory>& trajs) {
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "traj_%03zu.csv", i);
    write_trajectory_csv(trajs[i], (dir / name).string());
  }
}

VerificationReport run_flownorm(const Job& job, CoordinateChange& change,
                                std::vector<Trajectory>& trajs) {
  auto [ch, tsys] = flow_based_normal_form(job.system, job.cert, job.opt.c);
  change = ch;

  VerificationReport rep;
  ReportSection sec;
  sec.stage = "normal_form";
  sec.spec = StabilitySpec{SpecKind::Contraction, 1.0, 1.0, {}, job.opt.slack};
  sec.pass = true;
  sec.worst = -HUGE_VAL;
  for (const auto& u : sphere_points(change.dim, 5)) {
    for (double r : log_grid(0.05, 20.0, 4)) {
      const Vec y = scaled(u, r);
      const double dev = norm(add(tsys.rhs(y, {}), y)) / norm(y);
      if (dev > sec.worst) { sec.worst = dev; sec.witness = y; }
      if (dev > job.opt.slack) sec.pass = false;
      ++sec.samples;
    }
  }
  rep.sections.push_back(std::move(sec));

  const DisturbedSystem sys = tsys.as_system();
  const int n_traj = std::max(1, std::min(job.opt.trajectories, 20));
  const auto dirs = sphere_points(sys.dim_x, n_traj);
  for (int i = 0; i < n_traj; ++i) {
    const double r =
        n_traj > 1 ? 1e-2 * std::pow(1e4, double(i) / double(n_traj - 1)) : 1.0;
    trajs.push_back(simulate(sys, scaled(dirs[i], r), DisturbanceSignal::zero(0),
                             job.opt.t_end, job.opt.sim_tol));
  }
  rep.merge(check_uges(trajs, job.opt.check_c, job.opt.check_lambda, job.opt.slack));
  return rep;
}

void execute(const Job& job, RunResult& res) {
  VerificationReport report;
  std::vector<Trajectory> trajs;
  std::vector<std::tuple<std::string, Vec, Vec>> table;
  std::size_t table_dim = job.system.dim_x;
  const char* in_prefix = "x";
  const char* out_prefix = "y";

  switch (job.pipeline) {
    case Pipeline::UgasToUges: {
      auto r = pipeline_ugas_to_uges(job.system, job.cert, job.opt);
      report = std::move(r.report);
      trajs = std::move(r.trajectories);
      table = sample_state_change(r.change);
      break;
    }
    case Pipeline::IssToIses: {
      auto r = pipeline_iss_to_ises(job.system, job.cert, job.opt);
      report = std::move(r.report);
      trajs = std::move(r.trajectories);
      table = sample_state_change(r.change);
      break;
    }
    case Pipeline::IsesToHinf: {
      auto ises = pipeline_iss_to_ises(job.system, job.cert, job.opt);
      auto r = pipeline_ises_to_hinf(ises.tsys.as_system(), ises.alpha_tilde, job.hinf);
      report = std::move(ises.report);
      report.merge(std::move(r.report));
      trajs = std::move(r.trajectories);
      in_prefix = "d";
      out_prefix = "v";
      table_dim = job.system.dim_d;
      const auto dirs = sphere_points(job.system.dim_d, 8);
      const double d_hi = std::isfinite(job.system.disturbance_radius)
                              ? job.system.disturbance_radius : 10.0;
      for (const auto& u : dirs) {
        for (double r_d : log_grid(1e-2 * d_hi, d_hi, 16)) {
          const Vec d = scaled(u, r_d);
          table.emplace_back("R", d, r.input.forward(d));
          table.emplace_back("Rinv", d, r.input.inverse(d));
        }
      }
      break;
    }
    case Pipeline::FlowNorm: {
      CoordinateChange change;
      report = run_flownorm(job, change, trajs);
      table = sample_state_change(change);
      break;
    }
  }

  write_change_table(job.out_dir / "change_table.csv", table, in_prefix, out_prefix,
                     table_dim);
  write_trajectories(job.out_dir / "trajectories", trajs);

  res.report_text = report.summary() + "\n" + report.to_text();
  std::ofstream rf(job.out_dir / "report.txt");
  if (!rf) raise(ErrorCode::IoError, "cannot write report.txt");
  rf << res.report_text;
  rf.close();

  res.exit_code = report.pass() ? 0 : 2;
}

}  // namespace

RunResult run_config_parsed(const ConfigFile& cfg, const RunOverrides& ov) {
  RunResult res;
  Job job;
  try {
    job = configure(cfg, ov);
  } catch (const Error& e) {
    res.exit_code = 4;
    res.diagnostic = e.what();
    return res;
  }
  try {
    execute(job, res);
  } catch (const Error& e) {
    res.exit_code = 3;
    res.diagnostic = e.what();
  }
  return res;
}

RunResult run_config(const std::string& config_path, const RunOverrides& ov) {
  ConfigFile cfg;
  try {
    cfg = ConfigFile::parse_file(config_path);
  } catch (const Error& e) {
    RunResult res;
    res.exit_code = 4;
    res.diagnostic = e.what();
    return res;
  }
  return run_config_parsed(cfg, ov);
}

}  // namespace stab
