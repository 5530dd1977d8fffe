#pragma once

// Data-parallel inner loops with a scalar reference and an AVX2 variant.
// The variant is picked once at runtime from CPU support; AFFAUDIT_SIMD=scalar
// in the environment forces the reference path. Both paths produce
// bit-identical results (integer sums, and the same IEEE operation sequence
// for floating point), which the equivalence tests check.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace affaudit::simd {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);
bool cpu_supports(Isa isa);
/// The ISA used by the dispatching entry points below.
Isa active_isa();
/// Overrides dispatch (nullopt restores detection). Requests for an ISA the
/// CPU lacks fall back to Scalar. Not thread-safe; meant for tests and CLI.
void force_isa(std::optional<Isa> isa);

/// Sum of values[indexes[i]] over all i. Every index must be < values.size().
std::int64_t gather_sum(std::span<const std::int32_t> values,
                        std::span<const std::uint32_t> indexes);

/// Weighted Gini impurity of every binary split of n samples sorted by one
/// feature. left_positives[i] is the positive count among the first i + 1
/// samples; out[i] receives the impurity of splitting after sample i.
/// Both spans have length n - 1.
void split_impurities(std::span<const std::int32_t> left_positives, std::int32_t total_positives,
                      std::span<double> out);

namespace scalar {
std::int64_t gather_sum(std::span<const std::int32_t> values,
                        std::span<const std::uint32_t> indexes);
void split_impurities(std::span<const std::int32_t> left_positives, std::int32_t total_positives,
                      std::span<double> out);
}  // namespace scalar

#if defined(__x86_64__) || defined(__i386__)
#define AFFAUDIT_HAVE_AVX2_KERNELS 1
namespace avx2 {
std::int64_t gather_sum(std::span<const std::int32_t> values,
                        std::span<const std::uint32_t> indexes);
void split_impurities(std::span<const std::int32_t> left_positives, std::int32_t total_positives,
                      std::span<double> out);
}  // namespace avx2
#endif

}  // namespace affaudit::simd
