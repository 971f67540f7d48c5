#pragma once

// Data-parallel inner loops used by the control and pattern code.
//
// Every kernel has a portable scalar reference and, where the host supports
// it, an AVX2 variant. The variant is chosen once at startup from CPUID and
// may be overridden with WHFT_ISA=scalar|avx2. Variants perform the same
// floating-point operations in the same order, so results are bit-identical
// across ISAs; the equivalence tests rely on that.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace whft::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_available(Isa isa);
Isa active_isa();
// Test hook; returns the previously active ISA. Not thread-safe.
Isa force_isa(Isa isa);

// c[m x n] = a[m x k] * b[k x n], all row-major; c must not alias a or b.
void gemm(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
          std::span<const double> b, std::span<double> c);

// max over i in [0, prefix.size() - window) of prefix[i + window] - prefix[i].
// prefix is an inclusive-scan with prefix[0] == 0; returns 0 when no window fits.
std::int32_t max_window_sum(std::span<const std::int32_t> prefix, std::size_t window);

namespace scalar {
void gemm(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
          double* c);
std::int32_t max_window_sum(const std::int32_t* prefix, std::size_t size, std::size_t window);
}  // namespace scalar

namespace avx2 {
bool compiled();
void gemm(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
          double* c);
std::int32_t max_window_sum(const std::int32_t* prefix, std::size_t size, std::size_t window);
}  // namespace avx2

}  // namespace whft::kernels
