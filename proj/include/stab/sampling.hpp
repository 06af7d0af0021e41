#pragma once

#include <cstdint>
#include <vector>

#include "stab/types.hpp"

namespace stab {

// Additive-recurrence (Kronecker) low-discrepancy sequence in [0,1)^dim,
// based on the generalized golden ratio.
class LowDiscrepancySeq {
public:
  explicit LowDiscrepancySeq(std::size_t dim, std::uint64_t offset = 0);
  Vec next();

private:
  std::vector<double> alpha_;
  std::vector<double> state_;
};

double inverse_normal_cdf(double p);

// dim unit-cube coordinates -> direction on S^{n-1} (Gaussian map; sign for n=1)
Vec sphere_from_unit(const double* u, std::size_t dim);

// dim + 1 unit-cube coordinates -> point of the closed ball
Vec ball_from_unit(const double* u, std::size_t dim, double radius);

// Quasi-uniform points on the unit sphere S^{n-1}.  n = 1 alternates {-1, +1}.
std::vector<Vec> sphere_points(std::size_t dim, std::size_t count,
                               std::uint64_t offset = 0);

// Quasi-uniform points in the closed ball of given radius.
std::vector<Vec> ball_points(std::size_t dim, double radius, std::size_t count,
                             std::uint64_t offset = 0);

}  // namespace stab
