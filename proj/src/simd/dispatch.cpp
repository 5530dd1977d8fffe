#include <cstdlib>
#include <string_view>

#include "affaudit/simd/kernels.hpp"

namespace affaudit::simd {

namespace {

Isa detect() {
  if (const char* env = std::getenv("AFFAUDIT_SIMD"); env && std::string_view(env) == "scalar") {
    return Isa::Scalar;
  }
  return cpu_supports(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

Isa& current() {
  static Isa isa = detect();
  return isa;
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#ifdef AFFAUDIT_HAVE_AVX2_KERNELS
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() { return current(); }

void force_isa(std::optional<Isa> isa) {
  current() = isa ? (cpu_supports(*isa) ? *isa : Isa::Scalar) : detect();
}

std::int64_t gather_sum(std::span<const std::int32_t> values,
                        std::span<const std::uint32_t> indexes) {
#ifdef AFFAUDIT_HAVE_AVX2_KERNELS
  if (current() == Isa::Avx2) return avx2::gather_sum(values, indexes);
#endif
  return scalar::gather_sum(values, indexes);
}

void split_impurities(std::span<const std::int32_t> left_positives, std::int32_t total_positives,
                      std::span<double> out) {
#ifdef AFFAUDIT_HAVE_AVX2_KERNELS
  if (current() == Isa::Avx2) return avx2::split_impurities(left_positives, total_positives, out);
#endif
  scalar::split_impurities(left_positives, total_positives, out);
}

}  // namespace affaudit::simd
