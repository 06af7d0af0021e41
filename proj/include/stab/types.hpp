#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace stab {

using Vec = std::vector<double>;

// Dense row-major matrix, small dimensions only.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  Vec apply(const Vec& x) const {
    Vec y(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) y[i] += (*this)(i, j) * x[j];
    return y;
  }
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec scaled(const Vec& a, double c) {
  Vec r(a);
  for (double& v : r) v *= c;
  return r;
}

inline Vec add(const Vec& a, const Vec& b) {
  Vec r(a);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
  Vec r(a);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

// y += c * x
inline void axpy(double c, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

// Spectral norm by power iteration on A'A.
double operator_norm(const Mat& a);

namespace limits {
inline constexpr double level_floor = 1e-10;     // states below this V-level count as origin
inline constexpr double equilibrium_pin = 1e-12; // simulate() pins the state to 0 below this norm
inline constexpr double blowup_guard = 1e12;
inline constexpr double annulus_v_min = 1e-6;    // certified working annulus in V
inline constexpr double annulus_v_max = 1e3;
}  // namespace limits

}  // namespace stab
