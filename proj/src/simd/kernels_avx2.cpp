// Compiled with -mavx2 (and nothing wider); only reached after a CPUID check.
#include <immintrin.h>

#include "affaudit/simd/kernels.hpp"

namespace affaudit::simd::avx2 {

std::int64_t gather_sum(std::span<const std::int32_t> values,
                        std::span<const std::uint32_t> indexes) {
  const std::size_t n = indexes.size();
  __m256i acc_lo = _mm256_setzero_si256();
  __m256i acc_hi = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256i idx =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(indexes.data() + i));
    const __m256i v = _mm256_i32gather_epi32(values.data(), idx, 4);
    acc_lo = _mm256_add_epi64(acc_lo, _mm256_cvtepi32_epi64(_mm256_castsi256_si128(v)));
    acc_hi = _mm256_add_epi64(acc_hi, _mm256_cvtepi32_epi64(_mm256_extracti128_si256(v, 1)));
  }
  alignas(32) std::int64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), _mm256_add_epi64(acc_lo, acc_hi));
  std::int64_t sum = lanes[0] + lanes[1] + lanes[2] + lanes[3];
  for (; i < n; ++i) sum += values[indexes[i]];
  return sum;
}

void split_impurities(std::span<const std::int32_t> left_positives, std::int32_t total_positives,
                      std::span<double> out) {
  const std::size_t m = left_positives.size();
  const double n_scalar = static_cast<double>(m + 1);
  const __m256d n = _mm256_set1_pd(n_scalar);
  const __m256d pos = _mm256_set1_pd(static_cast<double>(total_positives));
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d step = _mm256_set1_pd(4.0);
  __m256d ln = _mm256_set_pd(4.0, 3.0, 2.0, 1.0);

  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m128i lp_i =
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(left_positives.data() + i));
    const __m256d lp = _mm256_cvtepi32_pd(lp_i);
    const __m256d rn = _mm256_sub_pd(n, ln);
    const __m256d rp = _mm256_sub_pd(pos, lp);
    const __m256d left = _mm256_div_pd(_mm256_mul_pd(_mm256_mul_pd(two, lp), _mm256_sub_pd(ln, lp)), ln);
    const __m256d right =
        _mm256_div_pd(_mm256_mul_pd(_mm256_mul_pd(two, rp), _mm256_sub_pd(rn, rp)), rn);
    _mm256_storeu_pd(out.data() + i, _mm256_div_pd(_mm256_add_pd(left, right), n));
    ln = _mm256_add_pd(ln, step);
  }
  for (; i < m; ++i) {
    const double lnv = static_cast<double>(i + 1);
    const double lp = left_positives[i];
    const double rn = n_scalar - lnv;
    const double rp = static_cast<double>(total_positives) - lp;
    const double left = 2.0 * lp * (lnv - lp) / lnv;
    const double right = 2.0 * rp * (rn - rp) / rn;
    out[i] = (left + right) / n_scalar;
  }
}

}  // namespace affaudit::simd::avx2
