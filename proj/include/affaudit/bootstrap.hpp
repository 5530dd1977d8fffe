#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affaudit/compliance.hpp"

namespace affaudit {

struct StratifiedSampleSpec {
  std::vector<GroupDimension> strata;
  std::size_t quota = 1;
  std::uint64_t seed = 0;
  std::optional<Period> period;  // keep only this period when set
};

struct StratumReport {
  std::vector<std::string> key;
  std::size_t available = 0;
  std::size_t drawn = 0;  // quota, or 0 when the stratum was dropped
};

struct StratifiedSample {
  std::vector<VideoComplianceRecord> records;
  std::vector<StratumReport> strata;  // ordered by key
  std::size_t dropped = 0;
};

/// Draws exactly `quota` records without replacement from each stratum that
/// has at least that many; smaller strata are dropped and reported. Stratum
/// i (in key order) uses its own seeded stream. Throws StatsError when the
/// quota is 0 or every stratum is undersized.
StratifiedSample stratified_sample(std::span<const VideoComplianceRecord> records,
                                   const StratifiedSampleSpec& spec);

struct EffectEstimate {
  std::string metric;
  double delta = 0.0;  // percentage points, mean(A) - mean(B)
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_boot = 0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  bool significant = false;  // 0 outside [ci_low, ci_high]
  std::string interval_method = "percentile";
  std::uint64_t seed = 0;
};

/// Percentile bootstrap of the difference in means of two 0/1 indicator
/// samples, scaled to percentage points. Iteration i resamples both groups
/// from its own stream derive_seed(seed, stream, i), so the result does not
/// depend on evaluation order. Quantiles use linear interpolation between
/// order statistics. Throws StatsError for an empty group or n_boot < 100.
EffectEstimate bootstrap_effect(std::span<const std::int32_t> a, std::span<const std::int32_t> b,
                                std::size_t n_boot, std::uint64_t seed);

/// Share of records with status == metric, A minus B.
EffectEstimate bootstrap_effect(std::span<const VideoComplianceRecord> a,
                                std::span<const VideoComplianceRecord> b, ComplianceStatus metric,
                                std::size_t n_boot, std::uint64_t seed);

/// Linear-interpolation quantile of sorted data (q in [0, 1]).
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace affaudit
