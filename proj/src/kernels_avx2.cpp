#if defined(__x86_64__)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

// AVX2 variants of the reduction kernels. Lanes carry Knuth two-sum
// compensation so the vector paths keep the same error bound as the
// scalar Neumaier loops.

namespace randbin::kernels::detail {

namespace {

// s += x with exact residual accumulated into c (per lane).
inline void two_sum_acc(__m256d& s, __m256d& c, __m256d x) {
  __m256d t = _mm256_add_pd(s, x);
  __m256d z = _mm256_sub_pd(t, s);
  __m256d e = _mm256_add_pd(_mm256_sub_pd(s, _mm256_sub_pd(t, z)),
                            _mm256_sub_pd(x, z));
  c = _mm256_add_pd(c, e);
  s = t;
}

inline double reduce_with_comp(__m256d s, __m256d c) {
  alignas(32) double sv[4], cv[4];
  _mm256_store_pd(sv, s);
  _mm256_store_pd(cv, c);
  double total = 0.0, comp = 0.0;
  for (int i = 0; i < 4; ++i) {
    double x = sv[i] + cv[i];
    double t = total + x;
    if (std::fabs(total) >= std::fabs(x))
      comp += (total - t) + x;
    else
      comp += (x - t) + total;
    total = t;
  }
  return total + comp;
}

inline __m256d abs_pd(__m256d x) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  return _mm256_and_pd(x, mask);
}

}  // namespace

double sum_avx2(const double* x, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  __m256d c = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) two_sum_acc(s, c, _mm256_loadu_pd(x + i));
  double total = reduce_with_comp(s, c);
  for (; i < n; ++i) total += x[i];
  return total;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  __m256d c = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    two_sum_acc(s, c, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  double total = reduce_with_comp(s, c);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

double half_l1_avx2(const double* a, const double* b, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  __m256d c = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    two_sum_acc(s, c, d);
  }
  double total = reduce_with_comp(s, c);
  for (; i < n; ++i) total += std::fabs(a[i] - b[i]);
  return 0.5 * total;
}

}  // namespace randbin::kernels::detail

#endif  // __x86_64__
