#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "stabx.h"

int main(int argc, char** argv) {
  CLI::App app{"Stability-equivalence transformations: construct the change of "
               "variables for a certified system and verify the resulting "
               "UGES / ISES / H-infinity estimates"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  unsigned long long seed = 0;
  double tol = 0.0;
  int signals = -1;

  CLI::App* run = app.add_subcommand("run", "execute a pipeline config");
  run->add_option("config", config_path, "path to the run config")->required();
  CLI::Option* out_opt = run->add_option("--out", out_dir, "output directory");
  CLI::Option* seed_opt = run->add_option("--seed", seed, "disturbance seed");
  CLI::Option* tol_opt = run->add_option("--tol", tol, "simulation tolerance");
  CLI::Option* sig_opt = run->add_option("--signals", signals, "seeded signal count");

  bool machine = false;
  CLI::App* list = app.add_subcommand("list", "list the built-in system catalog");
  list->add_flag("--machine", machine, "tab-separated output with fixed columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 4 : 0;
  }

  if (list->parsed()) {
    if (!machine) std::printf("%-14s %5s %5s %9s  %s\n", "name", "dim_x", "dim_d",
                              "iss_gain", "description");
    for (int i = 0; i < stabx_catalog_count(); ++i) {
      char name[64];
      int dim_x = 0, dim_d = 0, has_gain = 0;
      stabx_catalog_info(i, name, sizeof(name), &dim_x, &dim_d, &has_gain);
      if (machine)
        std::printf("%s\t%d\t%d\t%d\t%s\n", name, dim_x, dim_d, has_gain,
                    stabx_catalog_description(i));
      else
        std::printf("%-14s %5d %5d %9s  %s\n", name, dim_x, dim_d,
                    has_gain ? "yes" : "no", stabx_catalog_description(i));
    }
    return 0;
  }

  stabx_run* job = stabx_run_create(config_path.c_str());
  if (!job) {
    std::fprintf(stderr, "error: out of memory\n");
    return 3;
  }
  if (out_opt->count()) stabx_run_set_out_dir(job, out_dir.c_str());
  if (seed_opt->count()) stabx_run_set_seed(job, seed);
  if (tol_opt->count()) stabx_run_set_tol(job, tol);
  if (sig_opt->count()) stabx_run_set_signals(job, signals);

  const int code = stabx_run_execute(job);
  const char* report = stabx_run_report(job);
  if (report && *report) std::fputs(report, stdout);
  const char* err = stabx_run_error(job);
  if (err && *err) std::fprintf(stderr, "error: %s\n", err);
  stabx_run_destroy(job);
  return code;
}
