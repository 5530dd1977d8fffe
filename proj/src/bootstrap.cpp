#include "affaudit/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "affaudit/rng.hpp"
#include "affaudit/simd/kernels.hpp"
#include "affaudit/stats.hpp"

namespace affaudit {

namespace {

constexpr std::uint64_t kStreamStrata = 21;
constexpr std::uint64_t kStreamBootstrap = 31;
constexpr std::size_t kMinBoot = 100;

}  // namespace

StratifiedSample stratified_sample(std::span<const VideoComplianceRecord> records,
                                   const StratifiedSampleSpec& spec) {
  if (spec.quota == 0) throw StatsError("stratum quota must be at least 1");
  std::map<std::vector<std::string>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (spec.period && records[i].period != *spec.period) continue;
    std::vector<std::string> key;
    for (const auto d : spec.strata) key.push_back(dimension_value(records[i], d));
    strata[key].push_back(i);
  }

  StratifiedSample out;
  std::size_t ordinal = 0;
  for (auto& [key, members] : strata) {
    StratumReport rep{key, members.size(), 0};
    if (members.size() >= spec.quota) {
      SplitMix64 rng(derive_seed(spec.seed, kStreamStrata, ordinal));
      // Partial Fisher-Yates: the first `quota` slots are the draw.
      for (std::size_t i = 0; i < spec.quota; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_below(rng, members.size() - i));
        std::swap(members[i], members[j]);
        out.records.push_back(records[members[i]]);
      }
      rep.drawn = spec.quota;
    } else {
      ++out.dropped;
    }
    out.strata.push_back(std::move(rep));
    ++ordinal;
  }
  if (out.records.empty()) throw StatsError("every stratum has fewer records than the quota");
  return out;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw StatsError("quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

EffectEstimate bootstrap_effect(std::span<const std::int32_t> a, std::span<const std::int32_t> b,
                                std::size_t n_boot, std::uint64_t seed) {
  if (a.empty() || b.empty()) throw StatsError("bootstrap needs two non-empty groups");
  if (n_boot < kMinBoot) {
    throw StatsError("n_boot must be at least " + std::to_string(kMinBoot));
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const auto sum = [](std::span<const std::int32_t> v) {
    return static_cast<double>(std::accumulate(v.begin(), v.end(), std::int64_t{0}));
  };

  EffectEstimate e;
  e.n_boot = n_boot;
  e.n_a = a.size();
  e.n_b = b.size();
  e.seed = seed;
  e.delta = 100.0 * (sum(a) / na - sum(b) / nb);

  std::vector<double> deltas(n_boot);
  std::vector<std::uint32_t> ia(a.size()), ib(b.size());
  for (std::size_t i = 0; i < n_boot; ++i) {
    SplitMix64 rng(derive_seed(seed, kStreamBootstrap, i));
    for (auto& x : ia) x = static_cast<std::uint32_t>(uniform_below(rng, a.size()));
    for (auto& x : ib) x = static_cast<std::uint32_t>(uniform_below(rng, b.size()));
    const double sa = static_cast<double>(simd::gather_sum(a, ia));
    const double sb = static_cast<double>(simd::gather_sum(b, ib));
    deltas[i] = 100.0 * (sa / na - sb / nb);
  }
  std::sort(deltas.begin(), deltas.end());
  e.ci_low = quantile_sorted(deltas, 0.025);
  e.ci_high = quantile_sorted(deltas, 0.975);
  e.significant = e.ci_low > 0.0 || e.ci_high < 0.0;
  return e;
}

EffectEstimate bootstrap_effect(std::span<const VideoComplianceRecord> a,
                                std::span<const VideoComplianceRecord> b, ComplianceStatus metric,
                                std::size_t n_boot, std::uint64_t seed) {
  const auto indicator = [&](std::span<const VideoComplianceRecord> rs) {
    std::vector<std::int32_t> v;
    v.reserve(rs.size());
    for (const auto& r : rs) v.push_back(r.status == metric ? 1 : 0);
    return v;
  };
  const auto va = indicator(a);
  const auto vb = indicator(b);
  auto e = bootstrap_effect(va, vb, n_boot, seed);
  e.metric = std::string(to_string(metric));
  return e;
}

}  // namespace affaudit
