#include "whft/kernels.hpp"

#include <algorithm>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define WHFT_HAVE_AVX2_TARGET 1
#else
#define WHFT_HAVE_AVX2_TARGET 0
#endif

namespace whft::kernels::avx2 {

#if WHFT_HAVE_AVX2_TARGET

bool compiled() { return true; }

// Vectorized over output columns. Products and sums are issued separately
// (no FMA) so every lane rounds exactly like the scalar reference.
__attribute__((target("avx2"))) void gemm(std::size_t m, std::size_t k, std::size_t n,
                                          const double* a, const double* b, double* c) {
  const std::size_t vec_end = n - n % 4;
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    std::size_t j = 0;
    for (; j < vec_end; j += 4) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d aip = _mm256_set1_pd(a[i * k + p]);
        const __m256d bv = _mm256_loadu_pd(b + p * n + j);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(aip, bv));
      }
      _mm256_storeu_pd(crow + j, acc);
    }
    for (; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        acc = acc + a[i * k + p] * b[p * n + j];
      }
      crow[j] = acc;
    }
  }
}

__attribute__((target("avx2"))) std::int32_t max_window_sum(const std::int32_t* prefix,
                                                            std::size_t size,
                                                            std::size_t window) {
  if (size == 0 || window + 1 > size) return 0;
  const std::size_t count = size - window;
  const std::size_t vec_end = count - count % 8;
  __m256i best = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i < vec_end; i += 8) {
    const __m256i lo =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(prefix + i));
    const __m256i hi =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(prefix + i + window));
    best = _mm256_max_epi32(best, _mm256_sub_epi32(hi, lo));
  }
  alignas(32) std::int32_t lanes[8];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), best);
  std::int32_t result = *std::max_element(lanes, lanes + 8);
  for (; i < count; ++i) {
    result = std::max(result, prefix[i + window] - prefix[i]);
  }
  return result;
}

#else

bool compiled() { return false; }

void gemm(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
          double* c) {
  scalar::gemm(m, k, n, a, b, c);
}

std::int32_t max_window_sum(const std::int32_t* prefix, std::size_t size, std::size_t window) {
  return scalar::max_window_sum(prefix, size, window);
}

#endif

}  // namespace whft::kernels::avx2
