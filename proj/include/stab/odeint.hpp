#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "stab/errors.hpp"
#include "stab/types.hpp"

namespace stab {

using OdeRhs = std::function<void(double t, const Vec& x, Vec& dxdt)>;

struct StepControl {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double h_init = 0.0;  // 0 = automatic
  double h_max = std::numeric_limits<double>::infinity();
  long max_steps = 1000000;
  double blowup_norm = std::numeric_limits<double>::infinity();
};

// One accepted Dormand-Prince 5(4) step with its dense-output polynomial.
struct DenseStep {
  double t0 = 0.0;
  double t1 = 0.0;
  Vec r1, r2, r3, r4, r5;

  Vec eval(double t) const;
};

// Integrates with adaptive DOPRI5 steps; on_step is called after every
// accepted step and may return false to stop early.
void dopri5_integrate(const OdeRhs& rhs, Vec x0, double t0, double t1,
                      const StepControl& ctl,
                      const std::function<bool(const DenseStep&)>& on_step);

Vec integrate_to(const OdeRhs& rhs, Vec x0, double t0, double t1,
                 const StepControl& ctl = {});

// Dense output sampled at the given (monotone, within [t0,t1]) times.
void integrate_observe(const OdeRhs& rhs, Vec x0, double t0, double t1,
                       const StepControl& ctl, const std::vector<double>& times,
                       const std::function<void(double, const Vec&)>& observer);

struct EventResult {
  bool hit = false;
  double t = 0.0;
  Vec x;
};

// Integrates until event(t, x) crosses zero (located on the dense output) or
// t reaches t_max.
EventResult integrate_until(const OdeRhs& rhs, Vec x0, double t0, double t_max,
                            const std::function<double(double, const Vec&)>& event,
                            const StepControl& ctl = {});

}  // namespace stab
