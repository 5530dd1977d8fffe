#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "affaudit/crawl_model.hpp"

namespace affaudit {

enum class NodeKind { Network, Dom, Decoration, Storage, Js };
enum class EdgeKind { Redirect, Modification, Access };
inline constexpr std::size_t kNodeKindCount = 5;
inline constexpr std::size_t kEdgeKindCount = 3;

std::string_view to_string(NodeKind k);
std::string_view to_string(EdgeKind k);

// Decoration labels carry a role prefix so a key and a value with the same
// spelling stay distinct nodes.
inline constexpr std::string_view kDecorationKeyPrefix = "k:";
inline constexpr std::string_view kDecorationValuePrefix = "v:";
/// Minimum stored-value length for substring flow matching. Shorter values
/// only match a decoration value exactly.
inline constexpr std::size_t kMinFlowMatchLength = 4;

struct GraphNode {
  int node_id = 0;
  NodeKind kind = NodeKind::Network;
  std::string label;

  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  int src = 0;
  int dst = 0;
  EdgeKind kind = EdgeKind::Redirect;
  int order_index = 0;

  bool operator==(const GraphEdge&) const = default;
};

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Typed multigraph of one clicked link. At most one edge per
/// (src, dst, kind); node ids are dense and follow insertion order.
class InteractionGraph {
 public:
  InteractionGraph() = default;
  explicit InteractionGraph(std::string link_id) : link_id_(std::move(link_id)) {}

  const std::string& link_id() const { return link_id_; }
  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }

  /// Returns the id of the (kind, label) node, creating it if needed.
  int intern(NodeKind kind, std::string_view label);
  std::optional<int> find(NodeKind kind, std::string_view label) const;
  /// Adds an edge unless an identical (src, dst, kind) edge exists. Returns
  /// whether an edge was added.
  bool connect(int src, int dst, EdgeKind kind);

  bool operator==(const InteractionGraph&) const = default;

 private:
  std::string link_id_;
  std::vector<GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
};

/// Builds the graph of a validated record. Throws GraphError when the
/// redirect chain is not contiguous.
InteractionGraph build_graph(const CrawlRecord& record);

struct GraphStats {
  std::array<std::size_t, kNodeKindCount> nodes_by_kind{};
  std::array<std::size_t, kEdgeKindCount> edges_by_kind{};
  std::size_t chain_length = 1;  // Redirect edges + 1

  std::size_t node_count(NodeKind k) const { return nodes_by_kind[static_cast<std::size_t>(k)]; }
  std::size_t edge_count(EdgeKind k) const { return edges_by_kind[static_cast<std::size_t>(k)]; }
  bool operator==(const GraphStats&) const = default;
};

GraphStats graph_stats(const InteractionGraph& g);

/// Structural invariant violations (empty when the graph is well formed).
std::vector<std::string> check_graph(const InteractionGraph& g);

/// JSON dump for debugging: {"link_id", "nodes": [...], "edges": [...]}.
std::string graph_to_json(const InteractionGraph& g);

}  // namespace affaudit
