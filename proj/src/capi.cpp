#include "stabx.h"

#include <cstring>
#include <new>
#include <string>

#include "stab/runner.hpp"
#include "stab/sys.hpp"

struct stabx_run {
  std::string config_path;
  stab::RunOverrides overrides;
  stab::RunResult result;
  bool executed = false;
};

extern "C" {

const char* stabx_version(void) { return "1.0.0"; }

stabx_run* stabx_run_create(const char* config_path) {
  if (!config_path) return nullptr;
  auto* run = new (std::nothrow) stabx_run;
  if (run) run->config_path = config_path;
  return run;
}

void stabx_run_destroy(stabx_run* run) { delete run; }

int stabx_run_set_out_dir(stabx_run* run, const char* dir) {
  if (!run || !dir) return -1;
  run->overrides.out_dir = dir;
  return 0;
}

int stabx_run_set_seed(stabx_run* run, unsigned long long seed) {
  if (!run) return -1;
  run->overrides.seed = seed;
  return 0;
}

int stabx_run_set_tol(stabx_run* run, double tol) {
  if (!run || !(tol > 0.0)) return -1;
  run->overrides.tol = tol;
  return 0;
}

int stabx_run_set_signals(stabx_run* run, int signals) {
  if (!run || signals < 0) return -1;
  run->overrides.signals = signals;
  return 0;
}

int stabx_run_execute(stabx_run* run) {
  if (!run) return -1;
  try {
    run->result = stab::run_config(run->config_path, run->overrides);
  } catch (const std::exception& e) {
    run->result = stab::RunResult{3, "", e.what()};
  }
  run->executed = true;
  return run->result.exit_code;
}

int stabx_run_passed(const stabx_run* run) {
  return run && run->executed && run->result.exit_code == 0 ? 1 : 0;
}

const char* stabx_run_report(const stabx_run* run) {
  return run ? run->result.report_text.c_str() : "";
}

const char* stabx_run_error(const stabx_run* run) {
  return run ? run->result.diagnostic.c_str() : "";
}

int stabx_catalog_count(void) {
  return static_cast<int>(stab::catalog().size());
}

int stabx_catalog_info(int index, char* name_buf, int name_cap, int* dim_x,
                       int* dim_d, int* has_iss_gain) {
  const auto& cat = stab::catalog();
  if (index < 0 || index >= static_cast<int>(cat.size())) return -1;
  const auto& e = cat[std::size_t(index)];
  if (name_buf && name_cap > 0) {
    std::strncpy(name_buf, e.name.c_str(), std::size_t(name_cap - 1));
    name_buf[name_cap - 1] = '\0';
  }
  if (dim_x) *dim_x = static_cast<int>(e.system.dim_x);
  if (dim_d) *dim_d = static_cast<int>(e.system.dim_d);
  if (has_iss_gain) *has_iss_gain = e.cert.iss_gain ? 1 : 0;
  return 0;
}

const char* stabx_catalog_description(int index) {
  const auto& cat = stab::catalog();
  if (index < 0 || index >= static_cast<int>(cat.size())) return "";
  return cat[std::size_t(index)].description.c_str();
}

}  // extern "C"
