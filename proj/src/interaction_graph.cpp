#include "affaudit/interaction_graph.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "affaudit/detail/enum_names.hpp"

namespace affaudit {

namespace {
constexpr std::array<std::string_view, kNodeKindCount> kNodeKindNames = {
    "Network", "Dom", "Decoration", "Storage", "Js"};
constexpr std::array<std::string_view, kEdgeKindCount> kEdgeKindNames = {"Redirect",
                                                                         "Modification", "Access"};
}  // namespace

std::string_view to_string(NodeKind k) { return detail::enum_name(k, kNodeKindNames); }
std::string_view to_string(EdgeKind k) { return detail::enum_name(k, kEdgeKindNames); }

int InteractionGraph::intern(NodeKind kind, std::string_view label) {
  if (auto id = find(kind, label)) return *id;
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({id, kind, std::string(label)});
  return id;
}

std::optional<int> InteractionGraph::find(NodeKind kind, std::string_view label) const {
  for (const auto& n : nodes_) {
    if (n.kind == kind && n.label == label) return n.node_id;
  }
  return std::nullopt;
}

bool InteractionGraph::connect(int src, int dst, EdgeKind kind) {
  const int n = static_cast<int>(nodes_.size());
  if (src < 0 || dst < 0 || src >= n || dst >= n) {
    throw GraphError("edge references a missing node");
  }
  const bool exists = std::any_of(edges_.begin(), edges_.end(), [&](const GraphEdge& e) {
    return e.src == src && e.dst == dst && e.kind == kind;
  });
  if (exists) return false;
  edges_.push_back({src, dst, kind, static_cast<int>(edges_.size())});
  return true;
}

namespace {

std::string origin_of(const std::string& url) {
  const auto parsed = parse_url(url);
  if (!parsed) throw GraphError("not an absolute URL: " + url);
  return parsed->origin();
}

std::string dom_label(const DomHook& h) {
  return h.class_id.empty() ? h.element_name : h.element_name + "." + h.class_id;
}

struct Decoration {
  std::string value;
  std::size_t hop;
  int key_node;
};

bool value_flows(const std::string& stored, const std::string& carried) {
  if (stored.empty() || carried.empty()) return false;
  if (stored == carried) return true;
  return stored.size() >= kMinFlowMatchLength && carried.find(stored) != std::string::npos;
}

}  // namespace

InteractionGraph build_graph(const CrawlRecord& record) {
  for (std::size_t i = 0; i < record.redirects.size(); ++i) {
    const auto& ev = record.redirects[i];
    const auto& expected = i == 0 ? record.original_url : record.redirects[i - 1].target_url;
    if (ev.sequence_index != static_cast<int>(i) || ev.source_url != expected) {
      throw GraphError("record " + record.link_id + ": redirect chain is not contiguous at " +
                       std::to_string(i));
    }
  }

  InteractionGraph g(record.link_id);
  const std::size_t last_hop = record.redirects.size();

  std::vector<std::string> hop_origin(last_hop + 1);
  for (std::size_t h = 0; h <= last_hop; ++h) hop_origin[h] = origin_of(record.url_at_hop(h));

  auto storage_hop = [&](const StorageEvent& ev) -> std::size_t {
    if (ev.hop >= 0) return std::min<std::size_t>(ev.hop, last_hop);
    for (std::size_t h = 0; h <= last_hop; ++h) {
      if (hop_origin[h] == ev.actor_origin) return h;
    }
    return 0;
  };
  auto page_hop = [&](int hop) -> std::size_t {
    return hop >= 0 ? std::min<std::size_t>(hop, last_hop) : last_hop;
  };

  std::vector<Decoration> decorations;
  std::set<std::string> chain_origins;
  int tip = -1;
  for (std::size_t h = 0; h <= last_hop; ++h) {
    const bool fresh = chain_origins.insert(hop_origin[h]).second;
    const int net = g.intern(NodeKind::Network, hop_origin[h]);
    // Redirect edges only enter origins not seen before, so they always
    // extend a single path.
    if (tip >= 0 && fresh) g.connect(tip, net, EdgeKind::Redirect);
    if (tip < 0 || fresh) tip = net;

    const std::vector<QueryParam> params =
        h == 0 ? parse_url(record.original_url)->query : record.redirects[h - 1].query_params;
    for (const auto& [key, value] : params) {
      const int k = g.intern(NodeKind::Decoration, std::string(kDecorationKeyPrefix) + key);
      g.connect(net, k, EdgeKind::Access);
      if (!value.empty()) {
        const int v = g.intern(NodeKind::Decoration, std::string(kDecorationValuePrefix) + value);
        g.connect(k, v, EdgeKind::Access);
      }
      decorations.push_back({value, h, k});
    }
    for (const auto& ev : record.storage_events) {
      if (storage_hop(ev) != h) continue;
      const int s = g.intern(NodeKind::Storage, ev.storage_key);
      const int actor = g.intern(NodeKind::Network, ev.actor_origin);
      if (ev.action == StorageAction::Write) {
        g.connect(actor, s, EdgeKind::Modification);
      } else {
        g.connect(s, actor, EdgeKind::Access);
      }
    }
    for (const auto& hook : record.dom_hooks) {
      if (page_hop(hook.hop) != h) continue;
      g.connect(net, g.intern(NodeKind::Dom, dom_label(hook)), EdgeKind::Access);
    }
    for (const auto& call : record.js_calls) {
      if (page_hop(call.hop) != h) continue;
      g.connect(net, g.intern(NodeKind::Js, call.function_name), EdgeKind::Access);
    }
  }

  // Information flow: a value written to storage before a hop and carried
  // in one of that hop's decorations.
  for (const auto& dec : decorations) {
    for (const auto& ev : record.storage_events) {
      if (ev.action != StorageAction::Write || storage_hop(ev) >= dec.hop) continue;
      if (!value_flows(ev.storage_value, dec.value)) continue;
      const int s = *g.find(NodeKind::Storage, ev.storage_key);
      g.connect(s, dec.key_node, EdgeKind::Access);
    }
  }
  return g;
}

GraphStats graph_stats(const InteractionGraph& g) {
  GraphStats stats;
  for (const auto& n : g.nodes()) ++stats.nodes_by_kind[static_cast<std::size_t>(n.kind)];
  for (const auto& e : g.edges()) ++stats.edges_by_kind[static_cast<std::size_t>(e.kind)];
  stats.chain_length = stats.edge_count(EdgeKind::Redirect) + 1;
  return stats;
}

std::vector<std::string> check_graph(const InteractionGraph& g) {
  std::vector<std::string> problems;
  const int n = static_cast<int>(g.nodes().size());
  std::set<std::pair<NodeKind, std::string>> seen;
  bool has_network = false;
  for (int i = 0; i < n; ++i) {
    const auto& node = g.nodes()[i];
    if (node.node_id != i) problems.push_back("node ids are not dense");
    if (!seen.emplace(node.kind, node.label).second) {
      problems.push_back("duplicate node " + std::string(to_string(node.kind)) + ":" + node.label);
    }
    has_network |= node.kind == NodeKind::Network;
  }
  if (!has_network) problems.push_back("graph has no Network node");

  std::map<int, int> out_deg, in_deg;
  std::vector<const GraphEdge*> redirects;
  for (const auto& e : g.edges()) {
    if (e.src < 0 || e.dst < 0 || e.src >= n || e.dst >= n) {
      problems.push_back("edge references a missing node");
      continue;
    }
    if (e.kind == EdgeKind::Redirect) {
      if (g.nodes()[e.src].kind != NodeKind::Network || g.nodes()[e.dst].kind != NodeKind::Network) {
        problems.push_back("Redirect edge between non-Network nodes");
      }
      ++out_deg[e.src];
      ++in_deg[e.dst];
      redirects.push_back(&e);
    }
  }
  for (const auto& [node, d] : out_deg) {
    if (d > 1) problems.push_back("Network node " + std::to_string(node) + " has Redirect out-degree > 1");
  }
  for (const auto& [node, d] : in_deg) {
    if (d > 1) problems.push_back("Network node " + std::to_string(node) + " has Redirect in-degree > 1");
  }
  std::sort(redirects.begin(), redirects.end(),
            [](const GraphEdge* a, const GraphEdge* b) { return a->order_index < b->order_index; });
  for (std::size_t i = 1; i < redirects.size(); ++i) {
    if (redirects[i]->src != redirects[i - 1]->dst) {
      problems.push_back("Redirect edges do not form a single path");
      break;
    }
  }
  return problems;
}

std::string graph_to_json(const InteractionGraph& g) {
  nlohmann::ordered_json j;
  j["link_id"] = g.link_id();
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& node : g.nodes()) {
    j["nodes"].push_back({{"id", node.node_id}, {"kind", to_string(node.kind)}, {"label", node.label}});
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : g.edges()) {
    j["edges"].push_back(
        {{"src", e.src}, {"dst", e.dst}, {"kind", to_string(e.kind)}, {"order", e.order_index}});
  }
  return j.dump(2);
}

}  // namespace affaudit
