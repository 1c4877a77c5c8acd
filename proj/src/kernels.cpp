#include "randbin/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

namespace randbin::kernels {

namespace detail {

double sum_scalar(const double* x, std::size_t n) {
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double t = s + x[i];
    if (std::fabs(s) >= std::fabs(x[i]))
      c += (s - t) + x[i];
    else
      c += (x[i] - t) + s;
    s = t;
  }
  return s + c;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double p = a[i] * b[i];
    double t = s + p;
    if (std::fabs(s) >= std::fabs(p))
      c += (s - t) + p;
    else
      c += (p - t) + s;
    s = t;
  }
  return s + c;
}

double half_l1_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = std::fabs(a[i] - b[i]);
    double t = s + d;
    if (s >= d)
      c += (s - t) + d;
    else
      c += (d - t) + s;
    s = t;
  }
  return 0.5 * (s + c);
}

}  // namespace detail

namespace {

SimdLevel resolve_level() {
  if (const char* env = std::getenv("RANDBIN_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return SimdLevel::scalar;
#if defined(__x86_64__)
    if (std::strcmp(env, "avx2") == 0) return SimdLevel::avx2;
#endif
  }
#if defined(__x86_64__)
  if (__builtin_cpu_supports("avx2")) return SimdLevel::avx2;
#endif
  return SimdLevel::scalar;
}

}  // namespace

SimdLevel active_level() {
  static const SimdLevel level = resolve_level();
  return level;
}

const char* level_name(SimdLevel level) {
  switch (level) {
    case SimdLevel::scalar: return "scalar";
    case SimdLevel::avx2: return "avx2";
  }
  return "?";
}

double sum(std::span<const double> x) {
#if defined(__x86_64__)
  if (active_level() == SimdLevel::avx2) return detail::sum_avx2(x.data(), x.size());
#endif
  return detail::sum_scalar(x.data(), x.size());
}

double dot(std::span<const double> a, std::span<const double> b) {
#if defined(__x86_64__)
  if (active_level() == SimdLevel::avx2) return detail::dot_avx2(a.data(), b.data(), a.size());
#endif
  return detail::dot_scalar(a.data(), b.data(), a.size());
}

double half_l1_distance(std::span<const double> a, std::span<const double> b) {
#if defined(__x86_64__)
  if (active_level() == SimdLevel::avx2)
    return detail::half_l1_avx2(a.data(), b.data(), a.size());
#endif
  return detail::half_l1_scalar(a.data(), b.data(), a.size());
}

}  // namespace randbin::kernels
