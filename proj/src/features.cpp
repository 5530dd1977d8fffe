#include "affaudit/features.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <vector>

namespace affaudit {

const std::array<std::string_view, kFeatureCount>& feature_names() {
  static constexpr std::array<std::string_view, kFeatureCount> names = {
      "graph_density",
      "mean_degree_centrality",
      "max_betweenness_centrality",
      "avg_shortest_path_len",
      "node_count",
      "edge_count",
      "storage_node_count",
      "decoration_node_count",
      "redirect_chain_len",
      "total_query_param_count",
      "mean_query_params_per_network_node",
      "kv_shannon_entropy_bits",
      "distinct_origin_count",
      "access_edge_count",
      "modification_edge_count",
  };
  return names;
}

namespace {

double entropy_of_counts(const std::array<std::size_t, 256>& counts, std::size_t total) {
  if (total == 0) return 0.0;
  double h = 0.0;
  for (const auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

void count_bytes(std::string_view s, std::array<std::size_t, 256>& counts, std::size_t& total) {
  for (const unsigned char c : s) ++counts[c];
  total += s.size();
}

std::string_view strip_role(std::string_view label) {
  if (label.substr(0, kDecorationKeyPrefix.size()) == kDecorationKeyPrefix) {
    return label.substr(kDecorationKeyPrefix.size());
  }
  if (label.substr(0, kDecorationValuePrefix.size()) == kDecorationValuePrefix) {
    return label.substr(kDecorationValuePrefix.size());
  }
  return label;
}

using Adjacency = std::vector<std::vector<int>>;

// Brandes accumulation on an unweighted undirected graph. Returns the raw
// ordered-pair sums (each unordered pair counted twice).
std::vector<double> brandes(const Adjacency& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<double> cb(n, 0.0);
  std::vector<int> order, dist(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<std::vector<int>> preds(n);
  for (int s = 0; s < n; ++s) {
    order.clear();
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto& p : preds) p.clear();
    dist[s] = 0;
    sigma[s] = 1.0;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      order.push_back(v);
      for (const int w : adj[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int w = *it;
      for (const int v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }
  return cb;
}

}  // namespace

double shannon_entropy(std::string_view text) {
  std::array<std::size_t, 256> counts{};
  std::size_t total = 0;
  count_bytes(text, counts, total);
  return entropy_of_counts(counts, total);
}

double shannon_entropy(std::span<const QueryParam> kv_pairs) {
  std::array<std::size_t, 256> counts{};
  std::size_t total = 0;
  for (const auto& [k, v] : kv_pairs) {
    count_bytes(k, counts, total);
    count_bytes(v, counts, total);
  }
  return entropy_of_counts(counts, total);
}

FeatureVector extract_features(const InteractionGraph& g) {
  FeatureVector fv;
  fv.link_id = g.link_id();
  const auto& nodes = g.nodes();
  const auto& edges = g.edges();
  const int n = static_cast<int>(nodes.size());
  const double nd = n;

  std::set<std::pair<int, int>> directed;
  std::set<std::pair<int, int>> undirected;
  std::size_t network_nodes = 0, storage_nodes = 0, decoration_nodes = 0;
  for (const auto& node : nodes) {
    network_nodes += node.kind == NodeKind::Network;
    storage_nodes += node.kind == NodeKind::Storage;
    decoration_nodes += node.kind == NodeKind::Decoration;
  }
  std::size_t redirects = 0, access = 0, modification = 0, query_params = 0;
  for (const auto& e : edges) {
    redirects += e.kind == EdgeKind::Redirect;
    access += e.kind == EdgeKind::Access;
    modification += e.kind == EdgeKind::Modification;
    if (nodes[e.src].kind == NodeKind::Network && nodes[e.dst].kind == NodeKind::Decoration) {
      ++query_params;
    }
    if (e.src == e.dst) continue;
    directed.emplace(e.src, e.dst);
    undirected.emplace(std::min(e.src, e.dst), std::max(e.src, e.dst));
  }

  Adjacency adj(n);
  for (const auto& [a, b] : undirected) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }

  fv[Feature::GraphDensity] = n <= 1 ? 0.0 : static_cast<double>(directed.size()) / (nd * (nd - 1));
  fv[Feature::MeanDegreeCentrality] =
      n <= 1 ? 0.0 : 2.0 * static_cast<double>(undirected.size()) / (nd * (nd - 1));

  if (n > 2) {
    const auto cb = brandes(adj);
    fv[Feature::MaxBetweennessCentrality] =
        *std::max_element(cb.begin(), cb.end()) / ((nd - 1) * (nd - 2));
  }

  std::size_t pair_count = 0;
  std::size_t path_total = 0;
  std::vector<int> dist(n);
  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[s] = 0;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (const int w : adj[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push(w);
        }
      }
    }
    for (int t = s + 1; t < n; ++t) {
      if (dist[t] > 0) {
        ++pair_count;
        path_total += static_cast<std::size_t>(dist[t]);
      }
    }
  }
  fv[Feature::AvgShortestPathLen] =
      pair_count == 0 ? 0.0 : static_cast<double>(path_total) / static_cast<double>(pair_count);

  fv[Feature::NodeCount] = nd;
  fv[Feature::EdgeCount] = static_cast<double>(edges.size());
  fv[Feature::StorageNodeCount] = static_cast<double>(storage_nodes);
  fv[Feature::DecorationNodeCount] = static_cast<double>(decoration_nodes);
  fv[Feature::RedirectChainLen] = static_cast<double>(redirects + 1);
  fv[Feature::TotalQueryParamCount] = static_cast<double>(query_params);
  fv[Feature::MeanQueryParamsPerNetworkNode] =
      network_nodes == 0 ? 0.0
                         : static_cast<double>(query_params) / static_cast<double>(network_nodes);

  std::array<std::size_t, 256> counts{};
  std::size_t total = 0;
  for (const auto& node : nodes) {
    if (node.kind == NodeKind::Decoration) count_bytes(strip_role(node.label), counts, total);
  }
  fv[Feature::KvShannonEntropyBits] = entropy_of_counts(counts, total);
  fv[Feature::DistinctOriginCount] = static_cast<double>(network_nodes);
  fv[Feature::AccessEdgeCount] = static_cast<double>(access);
  fv[Feature::ModificationEdgeCount] = static_cast<double>(modification);
  return fv;
}

}  // namespace affaudit
