#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "stab/lyap.hpp"
#include "stab/types.hpp"

namespace stab {

struct DisturbedSystem {
  std::function<Vec(const Vec& x, const Vec& d)> rhs;
  std::size_t dim_x = 0;
  std::size_t dim_d = 0;
  // radius of the disturbance-value ball; +inf means unbounded
  double disturbance_radius = std::numeric_limits<double>::infinity();
  bool non_lipschitz_at_origin = false;
  std::string name;
};

// Piecewise-constant disturbance: value[i] holds on [switch_times[i-1], switch_times[i]).
struct DisturbanceSignal {
  std::vector<double> switch_times;  // strictly increasing
  std::vector<Vec> values;           // size = switch_times.size() + 1
  std::uint64_t seed = 0;

  Vec at(double t) const;
  double sup_norm(double t) const;  // exact sup over [0, t]

  static DisturbanceSignal zero(std::size_t dim_d);
  static DisturbanceSignal constant(Vec v);
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::optional<DisturbanceSignal> input;
  double tol_used = 0.0;
};

Trajectory simulate(const DisturbedSystem& system, const Vec& x0,
                    const DisturbanceSignal& d, double t_end, double tol,
                    int report_points = 201);

struct DisturbanceSpec {
  std::size_t dim_d = 1;
  double amplitude = 1.0;
  double mean_dwell = 0.5;
};

DisturbanceSignal make_disturbance(const DisturbanceSpec& spec, double t_end,
                                   std::uint64_t seed);

struct CatalogEntry {
  std::string name;
  std::string description;
  DisturbedSystem system;
  LyapunovCertificate cert;
  // closed-form reference transform, when one exists
  std::function<Vec(const Vec&)> ref_forward;
  // overrides known to be admissible for this certificate
  std::optional<MonotoneScalarFn> suggested_gamma;
  std::optional<MonotoneScalarFn> suggested_alpha4;
};

const std::vector<CatalogEntry>& catalog();
const CatalogEntry& catalog(const std::string& name);

void write_trajectory_csv(const Trajectory& traj, const std::string& path);

}  // namespace stab
