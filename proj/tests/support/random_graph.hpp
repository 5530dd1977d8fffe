#pragma once
// Random interaction graphs for property tests. Node kinds, labels and edges
// are drawn freely (self loops and parallel kinds included), so the graphs
// exercise disconnected components and multi-path betweenness that crawls
// rarely produce.

#include <cstdint>
#include <string>

#include "affaudit/interaction_graph.hpp"
#include "affaudit/rng.hpp"

namespace testsupport {

inline affaudit::InteractionGraph random_graph(std::uint64_t seed, int max_nodes = 50) {
  using namespace affaudit;
  SplitMix64 rng(seed);
  InteractionGraph g("g" + std::to_string(seed));
  const int n = 1 + static_cast<int>(uniform_below(rng, max_nodes));
  g.intern(NodeKind::Network, "https://n0.example");
  static constexpr const char* kAlphabet = "abcdefgh0123=_-";
  for (int i = 1; i < n; ++i) {
    const auto kind = static_cast<NodeKind>(uniform_below(rng, kNodeKindCount));
    std::string label;
    if (kind == NodeKind::Decoration) label = uniform_below(rng, 2) ? "k:" : "v:";
    const auto len = 1 + uniform_below(rng, 8);
    for (std::uint64_t c = 0; c < len; ++c) label += kAlphabet[uniform_below(rng, 15)];
    label += "#" + std::to_string(i);
    g.intern(kind, label);
  }
  // Sparse to dense, so both long paths and cliques occur.
  const double p = uniform_unit(rng) * (uniform_below(rng, 3) == 0 ? 0.5 : 0.12);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (uniform_unit(rng) < p) {
        g.connect(a, b, static_cast<EdgeKind>(uniform_below(rng, kEdgeKindCount)));
      }
    }
  }
  return g;
}

}  // namespace testsupport
