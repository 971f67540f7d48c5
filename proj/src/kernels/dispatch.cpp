#include "whft/kernels.hpp"

#include <atomic>
#include <cassert>
#include <cstdlib>
#include <string>

namespace whft::kernels {
namespace {

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa detect() {
  if (const char* env = std::getenv("WHFT_ISA")) {
    const std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && isa_available(Isa::avx2)) return Isa::avx2;
  }
  return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return avx2::compiled() && cpu_has_avx2();
  }
  return false;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

Isa force_isa(Isa isa) {
  if (!isa_available(isa)) isa = Isa::scalar;
  return current().exchange(isa);
}

void gemm(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
          std::span<const double> b, std::span<double> c) {
  assert(a.size() >= m * k && b.size() >= k * n && c.size() >= m * n);
  if (active_isa() == Isa::avx2) {
    avx2::gemm(m, k, n, a.data(), b.data(), c.data());
  } else {
    scalar::gemm(m, k, n, a.data(), b.data(), c.data());
  }
}

std::int32_t max_window_sum(std::span<const std::int32_t> prefix, std::size_t window) {
  if (active_isa() == Isa::avx2) {
    return avx2::max_window_sum(prefix.data(), prefix.size(), window);
  }
  return scalar::max_window_sum(prefix.data(), prefix.size(), window);
}

}  // namespace whft::kernels
