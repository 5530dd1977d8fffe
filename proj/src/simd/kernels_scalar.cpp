#include "affaudit/simd/kernels.hpp"

namespace affaudit::simd::scalar {

std::int64_t gather_sum(std::span<const std::int32_t> values,
                        std::span<const std::uint32_t> indexes) {
  std::int64_t sum = 0;
  for (const auto i : indexes) sum += values[i];
  return sum;
}

void split_impurities(std::span<const std::int32_t> left_positives, std::int32_t total_positives,
                      std::span<double> out) {
  const double n = static_cast<double>(left_positives.size() + 1);
  const double pos = total_positives;
  for (std::size_t i = 0; i < left_positives.size(); ++i) {
    const double ln = static_cast<double>(i + 1);
    const double lp = left_positives[i];
    const double rn = n - ln;
    const double rp = pos - lp;
    const double left = 2.0 * lp * (ln - lp) / ln;
    const double right = 2.0 * rp * (rn - rp) / rn;
    out[i] = (left + right) / n;
  }
}

}  // namespace affaudit::simd::scalar
