#include <doctest.h>

#include <cstring>
#include <vector>

#include "affaudit/forest.hpp"
#include "affaudit/rng.hpp"
#include "affaudit/simd/kernels.hpp"

using namespace affaudit;

namespace {

struct ImpurityCase {
  std::vector<std::int32_t> left;
  std::int32_t total = 0;
};

// Prefix counts of a random 0/1 label sequence of length n.
ImpurityCase random_case(SplitMix64& rng, std::size_t n) {
  ImpurityCase c;
  std::int32_t running = 0;
  for (std::size_t i = 0; i < n; ++i) {
    running += static_cast<std::int32_t>(uniform_below(rng, 2));
    if (i + 1 < n) c.left.push_back(running);
  }
  c.total = running;
  return c;
}

double gini_reference(std::int32_t lp, std::size_t ln, std::int32_t pos, std::size_t n) {
  auto gini = [](double p, double total) {
    const double q = p / total;
    return 1.0 - q * q - (1.0 - q) * (1.0 - q);
  };
  const double rn = static_cast<double>(n - ln);
  return (static_cast<double>(ln) * gini(lp, static_cast<double>(ln)) +
          rn * gini(pos - lp, rn)) /
         static_cast<double>(n);
}

std::vector<LabeledFeatures> toy_samples(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<LabeledFeatures> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : out[i].features.values) v = static_cast<double>(uniform_below(rng, 50));
    out[i].affiliate = out[i].features.values[2] + out[i].features.values[9] > 50;
    out[i].features.link_id = "s" + std::to_string(i);
  }
  return out;
}

}  // namespace

TEST_SUITE("simd") {
  TEST_CASE("scalar split_impurities matches the textbook Gini formula") {
    SplitMix64 rng(3);
    for (std::size_t n = 2; n < 40; ++n) {
      const auto c = random_case(rng, n);
      std::vector<double> out(c.left.size());
      simd::scalar::split_impurities(c.left, c.total, out);
      for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i] == doctest::Approx(gini_reference(c.left[i], i + 1, c.total, n)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("scalar gather_sum matches a direct loop") {
    const std::vector<std::int32_t> values{5, -3, 7, 1 << 30, -(1 << 30), 9};
    const std::vector<std::uint32_t> idx{3, 3, 3, 0, 5, 1, 4};
    CHECK(simd::scalar::gather_sum(values, idx) == 3LL * (1 << 30) + 5 + 9 - 3 - (1 << 30));
    CHECK(simd::scalar::gather_sum(values, std::span<const std::uint32_t>{}) == 0);
  }

  TEST_CASE("dispatch honours force_isa and falls back when unsupported") {
    simd::force_isa(simd::Isa::Scalar);
    CHECK(simd::active_isa() == simd::Isa::Scalar);
    simd::force_isa(simd::Isa::Avx2);
    CHECK(simd::active_isa() ==
          (simd::cpu_supports(simd::Isa::Avx2) ? simd::Isa::Avx2 : simd::Isa::Scalar));
    simd::force_isa(std::nullopt);
    CHECK(simd::cpu_supports(simd::Isa::Scalar));
  }

#ifdef AFFAUDIT_HAVE_AVX2_KERNELS
  TEST_CASE("AVX2 kernels are bit-identical to scalar on random inputs and every tail length") {
    if (!simd::cpu_supports(simd::Isa::Avx2)) {
      MESSAGE("CPU lacks AVX2; equivalence not exercised");
      return;
    }
    SplitMix64 rng(11);
    for (std::size_t n = 2; n < 300; n += (n < 40 ? 1 : 37)) {
      const auto c = random_case(rng, n);
      std::vector<double> a(c.left.size()), b(c.left.size());
      simd::scalar::split_impurities(c.left, c.total, a);
      simd::avx2::split_impurities(c.left, c.total, b);
      CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
    }
    for (std::size_t n = 0; n < 200; n += (n < 40 ? 1 : 23)) {
      std::vector<std::int32_t> values(1 + uniform_below(rng, 500));
      for (auto& v : values) v = static_cast<std::int32_t>(uniform_below(rng, 1u << 31)) - (1 << 30);
      std::vector<std::uint32_t> idx(n);
      for (auto& i : idx) i = static_cast<std::uint32_t>(uniform_below(rng, values.size()));
      CHECK(simd::scalar::gather_sum(values, idx) == simd::avx2::gather_sum(values, idx));
    }
  }

  TEST_CASE("forest training is identical under either ISA") {
    if (!simd::cpu_supports(simd::Isa::Avx2)) return;
    const auto samples = toy_samples(300, 5);
    ForestConfig cfg;
    cfg.n_trees = 15;
    simd::force_isa(simd::Isa::Scalar);
    const auto scalar_model = fit_forest(samples, cfg, 77);
    simd::force_isa(simd::Isa::Avx2);
    const auto avx2_model = fit_forest(samples, cfg, 77);
    simd::force_isa(std::nullopt);
    CHECK(serialize_model(scalar_model) == serialize_model(avx2_model));
  }
#endif
}
