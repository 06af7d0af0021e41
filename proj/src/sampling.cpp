#include "stab/sampling.hpp"

#include <cmath>

namespace stab {

LowDiscrepancySeq::LowDiscrepancySeq(std::size_t dim, std::uint64_t offset)
    : alpha_(dim), state_(dim, 0.5) {
  // generalized golden ratio: unique positive root of x^(d+1) = x + 1
  double phi = 2.0;
  for (int i = 0; i < 64; ++i)
    phi = std::pow(1.0 + phi, 1.0 / (double(dim) + 1.0));
  for (std::size_t j = 0; j < dim; ++j)
    alpha_[j] = std::fmod(std::pow(1.0 / phi, double(j + 1)), 1.0);
  for (std::uint64_t k = 0; k < offset; ++k) next();
}

Vec LowDiscrepancySeq::next() {
  for (std::size_t j = 0; j < state_.size(); ++j) {
    state_[j] += alpha_[j];
    if (state_[j] >= 1.0) state_[j] -= 1.0;
  }
  return state_;
}

double inverse_normal_cdf(double p) {
  // Acklam's rational approximation, refined by one Halley step.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
        / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
        / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
        / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

Vec sphere_from_unit(const double* u, std::size_t dim) {
  Vec g(dim);
  if (dim == 1) {
    g[0] = u[0] < 0.5 ? -1.0 : 1.0;
    return g;
  }
  for (std::size_t j = 0; j < dim; ++j)
    g[j] = inverse_normal_cdf(std::min(std::max(u[j], 1e-12), 1.0 - 1e-12));
  double n = norm(g);
  if (!(n > 1e-12)) { g.assign(dim, 0.0); g[0] = 1.0; n = 1.0; }
  return scaled(g, 1.0 / n);
}

Vec ball_from_unit(const double* u, std::size_t dim, double radius) {
  Vec dir = sphere_from_unit(u, dim);
  return scaled(dir, radius * std::pow(u[dim], 1.0 / double(dim)));
}

std::vector<Vec> sphere_points(std::size_t dim, std::size_t count, std::uint64_t offset) {
  std::vector<Vec> pts;
  pts.reserve(count);
  if (dim == 1) {
    for (std::size_t i = 0; i < count; ++i)
      pts.push_back(Vec{(i + offset) % 2 == 0 ? 1.0 : -1.0});
    return pts;
  }
  LowDiscrepancySeq seq(dim, offset);
  while (pts.size() < count) {
    Vec u = seq.next();
    Vec g(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      const double p = std::min(std::max(u[j], 1e-12), 1.0 - 1e-12);
      g[j] = inverse_normal_cdf(p);
    }
    const double n = norm(g);
    if (n < 1e-8) continue;
    pts.push_back(scaled(g, 1.0 / n));
  }
  return pts;
}

std::vector<Vec> ball_points(std::size_t dim, double radius, std::size_t count,
                             std::uint64_t offset) {
  std::vector<Vec> pts;
  pts.reserve(count);
  auto dirs = sphere_points(dim, count, offset);
  LowDiscrepancySeq rseq(1, offset + 17);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = rseq.next()[0];
    const double r = radius * std::pow(u, 1.0 / double(dim));
    pts.push_back(scaled(dirs[i], r));
  }
  return pts;
}

}  // namespace stab
