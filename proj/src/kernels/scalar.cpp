#include "whft/kernels.hpp"

#include <algorithm>

namespace whft::kernels::scalar {

void gemm(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
          double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    std::fill(crow, crow + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        crow[j] = crow[j] + aip * brow[j];
      }
    }
  }
}

std::int32_t max_window_sum(const std::int32_t* prefix, std::size_t size, std::size_t window) {
  if (size == 0 || window + 1 > size) return 0;
  std::int32_t best = 0;
  const std::size_t count = size - window;
  for (std::size_t i = 0; i < count; ++i) {
    best = std::max(best, prefix[i + window] - prefix[i]);
  }
  return best;
}

}  // namespace whft::kernels::scalar
