#pragma once

#include <cstddef>
#include <span>

// Dense reduction kernels used by the probability layer. Every kernel has a
// scalar reference implementation and an AVX2 variant; the variant is picked
// once at startup from CPUID and can be forced with RANDBIN_SIMD=scalar|avx2.
// All sums are Neumaier-compensated so that validating a 2^24-cell pmf still
// lands within the 1e-12 normalization tolerance.

namespace randbin::kernels {

enum class SimdLevel { scalar, avx2 };

SimdLevel active_level();
const char* level_name(SimdLevel level);

// Compensated sum of x.
double sum(std::span<const double> x);

// Compensated dot product; a and b must have equal length.
double dot(std::span<const double> a, std::span<const double> b);

// Total variation between two equal-length vectors: 0.5 * sum |a_i - b_i|.
double half_l1_distance(std::span<const double> a, std::span<const double> b);

namespace detail {
double sum_scalar(const double* x, std::size_t n);
double dot_scalar(const double* a, const double* b, std::size_t n);
double half_l1_scalar(const double* a, const double* b, std::size_t n);
#if defined(__x86_64__)
double sum_avx2(const double* x, std::size_t n);
double dot_avx2(const double* a, const double* b, std::size_t n);
double half_l1_avx2(const double* a, const double* b, std::size_t n);
#endif
}  // namespace detail

}  // namespace randbin::kernels
