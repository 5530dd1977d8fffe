#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "affaudit/interaction_graph.hpp"

namespace affaudit {

inline constexpr int kFeatureSchemaVersion = 1;

enum class Feature : std::size_t {
  GraphDensity,
  MeanDegreeCentrality,
  MaxBetweennessCentrality,
  AvgShortestPathLen,
  NodeCount,
  EdgeCount,
  StorageNodeCount,
  DecorationNodeCount,
  RedirectChainLen,
  TotalQueryParamCount,
  MeanQueryParamsPerNetworkNode,
  KvShannonEntropyBits,
  DistinctOriginCount,
  AccessEdgeCount,
  ModificationEdgeCount,
};
inline constexpr std::size_t kFeatureCount = 15;

/// Stable snake_case names in schema order.
const std::array<std::string_view, kFeatureCount>& feature_names();

struct FeatureVector {
  std::string link_id;
  int schema_version = kFeatureSchemaVersion;
  std::array<double, kFeatureCount> values{};

  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  bool operator==(const FeatureVector&) const = default;
};

/// Base-2 entropy of the byte distribution of the concatenated keys and
/// values. Empty input gives 0.
double shannon_entropy(std::span<const QueryParam> kv_pairs);
double shannon_entropy(std::string_view text);

/// Feature definitions:
///  - density: distinct ordered (src, dst) pairs, src != dst, over N(N-1);
///  - degree and betweenness centrality and shortest paths use the
///    undirected simple view; betweenness is normalized by (N-1)(N-2)/2 and
///    path lengths are averaged over connected unordered pairs only;
///  - query params are edges from Network to Decoration nodes;
///  - entropy runs over all Decoration labels with their role prefix removed.
FeatureVector extract_features(const InteractionGraph& g);

}  // namespace affaudit
