#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "randbin/pmf.hpp"

// Gaussian tail machinery: scalar Q and its inverse, multivariate lower
// orthant probabilities up to dimension 3, the quantile region
// { x : P(N(0,V) <= x) >= 1-eps } with membership and boundary queries, and
// Berry-Esseen error radii.

namespace randbin {

inline constexpr double kScalarBerryEsseenConstant = 0.5600;
// No explicit constant is available for the multivariate CLT step; this
// conservative default is exposed as a tunable.
inline constexpr double kMultivariateBerryEsseenConstant = 42.0;

// Gaussian upper tail P(N(0,1) > x).
double std_q(double x);

// Inverse of std_q on (0,1); monotone decreasing.
double std_q_inv(double eps);

// Standard normal CDF.
double std_phi(double x);

// P(X <= x componentwise) for X ~ N(mean, cov), dim in {1,2,3}. cov is
// row-major dim x dim and must be PSD; zero-variance coordinates collapse to
// deterministic thresholds at their means. For dim 3 the value comes from
// quasi-random integration; err_estimate (if non-null) receives an error
// estimate (0 for the deterministic 1-D/2-D paths).
double mvn_lower_orthant(std::span<const double> mean, std::span<const double> cov,
                         std::span<const double> x, double* err_estimate = nullptr);

// Lower CDF of a standard bivariate normal pair with correlation rho.
double bvn_lower(double h, double k, double rho);

struct GaussRegionSpec {
  CovMatrix2 cov;
  double eps = 0.0;  // in (0,1)
};

// True iff P(N(0,cov) <= x) >= 1-eps, with points within 1e-6 of the
// boundary counted as members (the region is closed).
bool region_membership(const GaussRegionSpec& spec, double x1, double x2);

// For each positive-component unit direction, the boundary crossing of the
// ray anchor + t*d, found by bisection to 1e-6. The anchor sits at the
// componentwise 1e-3 quantile corner so each ray crosses exactly once.
std::vector<std::pair<double, double>> region_boundary(
    const GaussRegionSpec& spec, std::span<const std::pair<double, double>> directions);

// Evenly spread positive-quadrant directions, endpoints excluded.
std::vector<std::pair<double, double>> quadrant_directions(int count);

struct MomentTriple {
  double mean = 0.0;
  double variance = 0.0;
  double third_abs_central = 0.0;
};

// CLT approximation radius c0 * rho / (sigma^3 sqrt(n)).
double berry_esseen_radius(const MomentTriple& m, std::int64_t n,
                           double c0 = kScalarBerryEsseenConstant);

}  // namespace randbin
