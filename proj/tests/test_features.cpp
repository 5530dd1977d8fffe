#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "affaudit/features.hpp"
#include "affaudit/fixtures.hpp"
#include "affaudit/rng.hpp"
#include "support/feature_oracle.hpp"
#include "support/random_graph.hpp"
#include "support/records.hpp"

using namespace affaudit;

namespace {

void check_against_oracle(const InteractionGraph& g, double tol) {
  const auto got = extract_features(g);
  const auto want = oracle::features(g);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    INFO(g.link_id(), " ", feature_names()[f]);
    CHECK(std::abs(got.values[f] - want.values[f]) <= tol);
  }
}

// Same graph with node insertion order permuted and edges re-added in a
// shuffled order.
InteractionGraph permuted(const InteractionGraph& g, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<int> order(g.nodes().size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(std::span<int>(order), rng);
  InteractionGraph out(g.link_id());
  std::vector<int> remap(order.size());
  for (const int old : order) {
    remap[old] = out.intern(g.nodes()[old].kind, g.nodes()[old].label);
  }
  auto edges = g.edges();
  shuffle(std::span<GraphEdge>(edges), rng);
  for (const auto& e : edges) out.connect(remap[e.src], remap[e.dst], e.kind);
  return out;
}

}  // namespace

TEST_SUITE("features") {
  TEST_CASE("shannon_entropy examples") {
    const std::vector<QueryParam> single{{"a", "aaa"}};
    CHECK(shannon_entropy(single) == 0.0);
    CHECK(shannon_entropy(std::string_view("abab")) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(shannon_entropy(std::span<const QueryParam>{}) == 0.0);
    CHECK(shannon_entropy(std::string_view("")) == 0.0);
    const std::vector<QueryParam> pairs{{"tag", "chan-20"}, {"ref_", "cm_sw_r"}, {"x", ""}};
    std::string joined;
    for (const auto& [k, v] : pairs) joined += k + v;
    CHECK(std::abs(shannon_entropy(pairs) - oracle::histogram_entropy(joined)) < 1e-12);
  }

  TEST_CASE("single-node graph conventions") {
    InteractionGraph g("one");
    g.intern(NodeKind::Network, "https://a.com");
    const auto fv = extract_features(g);
    CHECK(fv[Feature::GraphDensity] == 0.0);
    CHECK(fv[Feature::AvgShortestPathLen] == 0.0);
    CHECK(fv[Feature::RedirectChainLen] == 1.0);
    CHECK(fv[Feature::NodeCount] == 1.0);
    CHECK(fv[Feature::MaxBetweennessCentrality] == 0.0);
  }

  TEST_CASE("directed 3-node path: density 2/6 and average path 4/3") {
    const auto g = build_graph(
        testsupport::make_crawl("p", "v", {"https://a.com/", "https://b.com/", "https://c.com/"}));
    const auto fv = extract_features(g);
    CHECK(fv[Feature::GraphDensity] == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
    CHECK(fv[Feature::AvgShortestPathLen] == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(fv[Feature::MaxBetweennessCentrality] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(fv[Feature::MeanDegreeCentrality] == doctest::Approx(4.0 / 6.0).epsilon(1e-15));
    CHECK(fv[Feature::RedirectChainLen] == 3.0);
    CHECK(fv[Feature::DistinctOriginCount] == 3.0);
  }

  TEST_CASE("star graph: centre betweenness 1, leaves 0") {
    InteractionGraph g("star");
    const int c = g.intern(NodeKind::Network, "https://hub.com");
    for (int i = 0; i < 5; ++i) g.connect(c, g.intern(NodeKind::Js, "f" + std::to_string(i)), EdgeKind::Access);
    const auto fv = extract_features(g);
    CHECK(fv[Feature::MaxBetweennessCentrality] == doctest::Approx(1.0).epsilon(1e-15));
    // 5 pairs at distance 1, 10 at distance 2.
    CHECK(fv[Feature::AvgShortestPathLen] == doctest::Approx(25.0 / 15.0).epsilon(1e-15));
  }

  TEST_CASE("disconnected graph averages over connected pairs only") {
    InteractionGraph g("split");
    const int a = g.intern(NodeKind::Network, "https://a.com");
    const int b = g.intern(NodeKind::Network, "https://b.com");
    g.intern(NodeKind::Network, "https://c.com");
    g.connect(a, b, EdgeKind::Redirect);
    CHECK(extract_features(g)[Feature::AvgShortestPathLen] == 1.0);
  }

  TEST_CASE("20-graph fixture from crawls equals the brute-force oracle") {
    auto spec = default_generator_spec();
    spec.n_videos = 15;
    const auto gen = generate_corpus(spec);
    REQUIRE(gen.crawls.size() >= 20);
    for (std::size_t i = 0; i < 20; ++i) check_against_oracle(build_graph(gen.crawls[i]), 1e-9);
  }

  TEST_CASE("random graphs equal the brute-force oracle") {
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
      check_against_oracle(testsupport::random_graph(seed), 1e-9);
    }
  }

  TEST_CASE("feature invariants: finite, density in [0,1], entropy >= 0, integral counts") {
    for (std::uint64_t seed = 100; seed < 160; ++seed) {
      const auto fv = extract_features(testsupport::random_graph(seed));
      for (const double v : fv.values) CHECK(std::isfinite(v));
      CHECK(fv[Feature::GraphDensity] >= 0.0);
      CHECK(fv[Feature::GraphDensity] <= 1.0);
      CHECK(fv[Feature::KvShannonEntropyBits] >= 0.0);
      for (const auto f : {Feature::NodeCount, Feature::EdgeCount, Feature::StorageNodeCount,
                           Feature::DecorationNodeCount, Feature::RedirectChainLen,
                           Feature::TotalQueryParamCount, Feature::DistinctOriginCount,
                           Feature::AccessEdgeCount, Feature::ModificationEdgeCount}) {
        CHECK(fv[f] == std::floor(fv[f]));
        CHECK(fv[f] >= 0.0);
      }
    }
  }

  TEST_CASE("permuting node insertion order leaves features unchanged") {
    for (std::uint64_t seed = 200; seed < 240; ++seed) {
      const auto g = testsupport::random_graph(seed, 30);
      const auto a = extract_features(g);
      const auto b = extract_features(permuted(g, seed * 7));
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        INFO(feature_names()[f]);
        CHECK(std::abs(a.values[f] - b.values[f]) <= 1e-12);
      }
    }
  }

  TEST_CASE("feature names are unique snake_case") {
    const auto& names = feature_names();
    std::vector<std::string_view> sorted(names.begin(), names.end());
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    CHECK(names[0] == "graph_density");
    CHECK(names[14] == "modification_edge_count");
  }
}
