#pragma once
// Brute-force recomputation of every FeatureVector field, written without
// reference to the production code paths: adjacency matrices, Floyd-Warshall
// distances, shortest-path counting by dynamic programming over distance
// layers, and a std::map character histogram.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "affaudit/features.hpp"
#include "affaudit/interaction_graph.hpp"

namespace oracle {

using affaudit::EdgeKind;
using affaudit::Feature;
using affaudit::FeatureVector;
using affaudit::InteractionGraph;
using affaudit::NodeKind;

inline std::string without_role(const std::string& label) {
  if (label.rfind("k:", 0) == 0 || label.rfind("v:", 0) == 0) return label.substr(2);
  return label;
}

inline double histogram_entropy(const std::string& text) {
  if (text.empty()) return 0.0;
  std::map<char, long> freq;
  for (char c : text) freq[c] += 1;
  double h = 0.0;
  for (const auto& [c, count] : freq) {
    const double p = static_cast<double>(count) / static_cast<double>(text.size());
    h += -p * std::log(p) / std::log(2.0);
  }
  return h;
}

inline FeatureVector features(const InteractionGraph& g) {
  const int n = static_cast<int>(g.nodes().size());
  const double nd = n;
  std::vector<std::vector<bool>> dir(n, std::vector<bool>(n, false));
  std::vector<std::vector<bool>> und(n, std::vector<bool>(n, false));
  for (const auto& e : g.edges()) {
    if (e.src == e.dst) continue;
    dir[e.src][e.dst] = true;
    und[e.src][e.dst] = true;
    und[e.dst][e.src] = true;
  }

  FeatureVector fv;
  fv.link_id = g.link_id();

  long directed_pairs = 0;
  long degree_sum = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (dir[i][j]) ++directed_pairs;
      if (und[i][j]) ++degree_sum;
    }
  }
  if (n > 1) {
    fv[Feature::GraphDensity] = directed_pairs / (nd * (nd - 1));
    double centrality = 0.0;
    for (int i = 0; i < n; ++i) {
      long deg = 0;
      for (int j = 0; j < n; ++j) deg += und[i][j];
      centrality += deg / (nd - 1);
    }
    fv[Feature::MeanDegreeCentrality] = centrality / nd;
  }

  const long inf = std::numeric_limits<long>::max() / 4;
  std::vector<std::vector<long>> d(n, std::vector<long>(n, inf));
  for (int i = 0; i < n; ++i) {
    d[i][i] = 0;
    for (int j = 0; j < n; ++j) {
      if (und[i][j]) d[i][j] = 1;
    }
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
      }
    }
  }

  // sigma[s][t]: number of shortest s-t paths. A shortest path to t enters
  // through a neighbour one layer closer to s.
  std::vector<std::vector<double>> sigma(n, std::vector<double>(n, 0.0));
  for (int s = 0; s < n; ++s) {
    sigma[s][s] = 1.0;
    for (long layer = 1; layer < n; ++layer) {
      for (int t = 0; t < n; ++t) {
        if (d[s][t] != layer) continue;
        for (int u = 0; u < n; ++u) {
          if (und[u][t] && d[s][u] == layer - 1) sigma[s][t] += sigma[s][u];
        }
      }
    }
  }

  if (n > 2) {
    double best = 0.0;
    for (int v = 0; v < n; ++v) {
      double bc = 0.0;
      for (int s = 0; s < n; ++s) {
        for (int t = s + 1; t < n; ++t) {
          if (s == v || t == v || d[s][t] >= inf) continue;
          if (d[s][v] + d[v][t] == d[s][t]) bc += sigma[s][v] * sigma[v][t] / sigma[s][t];
        }
      }
      const double normalized = bc / ((nd - 1) * (nd - 2) / 2.0);
      if (normalized > best) best = normalized;
    }
    fv[Feature::MaxBetweennessCentrality] = best;
  }

  long pairs = 0;
  long length = 0;
  for (int s = 0; s < n; ++s) {
    for (int t = s + 1; t < n; ++t) {
      if (d[s][t] >= inf) continue;
      ++pairs;
      length += d[s][t];
    }
  }
  fv[Feature::AvgShortestPathLen] = pairs == 0 ? 0.0 : static_cast<double>(length) / pairs;

  long storage = 0, decoration = 0, network = 0;
  std::string kv;
  for (const auto& node : g.nodes()) {
    if (node.kind == NodeKind::Storage) ++storage;
    if (node.kind == NodeKind::Network) ++network;
    if (node.kind == NodeKind::Decoration) {
      ++decoration;
      kv += without_role(node.label);
    }
  }
  long redirect = 0, access = 0, modification = 0, params = 0;
  for (const auto& e : g.edges()) {
    if (e.kind == EdgeKind::Redirect) ++redirect;
    if (e.kind == EdgeKind::Access) ++access;
    if (e.kind == EdgeKind::Modification) ++modification;
    if (g.nodes()[e.src].kind == NodeKind::Network && g.nodes()[e.dst].kind == NodeKind::Decoration) {
      ++params;
    }
  }
  fv[Feature::NodeCount] = n;
  fv[Feature::EdgeCount] = static_cast<double>(g.edges().size());
  fv[Feature::StorageNodeCount] = storage;
  fv[Feature::DecorationNodeCount] = decoration;
  fv[Feature::RedirectChainLen] = redirect + 1;
  fv[Feature::TotalQueryParamCount] = params;
  fv[Feature::MeanQueryParamsPerNetworkNode] =
      network == 0 ? 0.0 : static_cast<double>(params) / network;
  fv[Feature::KvShannonEntropyBits] = histogram_entropy(kv);
  fv[Feature::DistinctOriginCount] = network;
  fv[Feature::AccessEdgeCount] = access;
  fv[Feature::ModificationEdgeCount] = modification;
  return fv;
}

}  // namespace oracle
