#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "affaudit/fixtures.hpp"
#include "affaudit/interaction_graph.hpp"
#include "affaudit/rng.hpp"
#include "support/records.hpp"

using namespace affaudit;
using testsupport::make_crawl;

namespace {

bool has_edge(const InteractionGraph& g, NodeKind sk, const std::string& sl, NodeKind dk,
              const std::string& dl, EdgeKind kind) {
  const auto s = g.find(sk, sl);
  const auto d = g.find(dk, dl);
  if (!s || !d) return false;
  return std::any_of(g.edges().begin(), g.edges().end(), [&](const GraphEdge& e) {
    return e.src == *s && e.dst == *d && e.kind == kind;
  });
}

}  // namespace

TEST_SUITE("interaction_graph") {
  TEST_CASE("record with no redirects and no events: one Network node, no edges") {
    const auto g = build_graph(make_crawl("l1", "v1", {"https://a.com/"}));
    REQUIRE(g.nodes().size() == 1);
    CHECK(g.nodes()[0].kind == NodeKind::Network);
    CHECK(g.nodes()[0].label == "https://a.com");
    CHECK(g.edges().empty());
    CHECK(graph_stats(g).chain_length == 1);
    CHECK(check_graph(g).empty());
  }

  TEST_CASE("chain a.com -> b.com -> c.com gives 3 Network nodes and 2 ordered Redirect edges") {
    const auto g =
        build_graph(make_crawl("l1", "v1", {"https://a.com/", "https://b.com/", "https://c.com/"}));
    const auto stats = graph_stats(g);
    CHECK(stats.node_count(NodeKind::Network) == 3);
    CHECK(stats.edge_count(EdgeKind::Redirect) == 2);
    CHECK(stats.chain_length == 3);
    std::vector<GraphEdge> redirects;
    for (const auto& e : g.edges()) {
      if (e.kind == EdgeKind::Redirect) redirects.push_back(e);
    }
    REQUIRE(redirects.size() == 2);
    CHECK(g.nodes()[redirects[0].src].label == "https://a.com");
    CHECK(g.nodes()[redirects[0].dst].label == "https://b.com");
    CHECK(g.nodes()[redirects[1].src].label == "https://b.com");
    CHECK(g.nodes()[redirects[1].dst].label == "https://c.com");
    CHECK(redirects[0].order_index < redirects[1].order_index);
  }

  TEST_CASE("stored value carried in a later decoration: Modification and Access edges") {
    // b.com writes uid=42; the next hop's URL carries ref=42.
    auto r = make_crawl("l1", "v1", {"https://a.com/", "https://b.com/", "https://c.com/?ref=42"});
    r.storage_events.push_back({"https://b.com", "uid", "42", StorageAction::Write, -1});
    const auto g = build_graph(r);
    CHECK(has_edge(g, NodeKind::Network, "https://b.com", NodeKind::Storage, "uid",
                   EdgeKind::Modification));
    CHECK(has_edge(g, NodeKind::Storage, "uid", NodeKind::Decoration, "k:ref", EdgeKind::Access));
    CHECK(has_edge(g, NodeKind::Network, "https://c.com", NodeKind::Decoration, "k:ref",
                   EdgeKind::Access));
    CHECK(has_edge(g, NodeKind::Decoration, "k:ref", NodeKind::Decoration, "v:42",
                   EdgeKind::Access));
    CHECK(check_graph(g).empty());
  }

  TEST_CASE("value matching: short values need an exact match, long values a substring") {
    auto base = make_crawl("l1", "v1", {"https://a.com/", "https://b.com/?x=abc42def&y=zz4"});
    SUBCASE("short value inside a longer decoration does not flow") {
      base.storage_events.push_back({"https://a.com", "s", "42", StorageAction::Write, 0});
      CHECK_FALSE(has_edge(build_graph(base), NodeKind::Storage, "s", NodeKind::Decoration, "k:x",
                           EdgeKind::Access));
    }
    SUBCASE("value of length 4 inside a decoration flows") {
      base.storage_events.push_back({"https://a.com", "s", "c42d", StorageAction::Write, 0});
      CHECK(has_edge(build_graph(base), NodeKind::Storage, "s", NodeKind::Decoration, "k:x",
                     EdgeKind::Access));
    }
    SUBCASE("a write on the same hop as the decoration does not flow") {
      base.storage_events.push_back({"https://b.com", "s", "zz4", StorageAction::Write, 1});
      CHECK_FALSE(has_edge(build_graph(base), NodeKind::Storage, "s", NodeKind::Decoration, "k:y",
                           EdgeKind::Access));
    }
  }

  TEST_CASE("reads, DOM hooks and JS calls attach to the active origin") {
    auto r = make_crawl("l1", "v1", {"https://a.com/", "https://b.com/"});
    r.storage_events.push_back({"https://a.com", "seen", "1", StorageAction::Read, 0});
    r.dom_hooks.push_back({"div", "banner", 0});
    r.js_calls.push_back({"fetch", -1});
    const auto g = build_graph(r);
    CHECK(has_edge(g, NodeKind::Storage, "seen", NodeKind::Network, "https://a.com",
                   EdgeKind::Access));
    CHECK(has_edge(g, NodeKind::Network, "https://a.com", NodeKind::Dom, "div.banner",
                   EdgeKind::Access));
    CHECK(has_edge(g, NodeKind::Network, "https://b.com", NodeKind::Js, "fetch", EdgeKind::Access));
  }

  TEST_CASE("a non-contiguous chain is rejected") {
    auto r = make_crawl("l1", "v1", {"https://a.com/", "https://b.com/", "https://c.com/"});
    r.redirects[1].source_url = "https://z.com/";
    CHECK_THROWS_AS(build_graph(r), GraphError);
  }

  TEST_CASE("connect rejects missing nodes and ignores duplicates") {
    InteractionGraph g("x");
    const int a = g.intern(NodeKind::Network, "https://a.com");
    CHECK(g.intern(NodeKind::Network, "https://a.com") == a);
    const int b = g.intern(NodeKind::Storage, "https://a.com");
    CHECK(a != b);
    CHECK(g.connect(a, b, EdgeKind::Modification));
    CHECK_FALSE(g.connect(a, b, EdgeKind::Modification));
    CHECK(g.connect(a, b, EdgeKind::Access));
    CHECK_THROWS_AS(g.connect(a, 7, EdgeKind::Access), GraphError);
  }

  TEST_CASE("check_graph reports broken redirect paths") {
    InteractionGraph g("x");
    const int a = g.intern(NodeKind::Network, "https://a.com");
    const int b = g.intern(NodeKind::Network, "https://b.com");
    const int c = g.intern(NodeKind::Network, "https://c.com");
    const int s = g.intern(NodeKind::Storage, "k");
    g.connect(a, b, EdgeKind::Redirect);
    g.connect(a, c, EdgeKind::Redirect);
    g.connect(s, a, EdgeKind::Redirect);
    CHECK(check_graph(g).size() >= 2);
  }

  TEST_CASE("50-record fixture: per-kind totals equal a brute-force recount") {
    auto spec = default_generator_spec();
    spec.n_videos = 40;
    const auto gen = generate_corpus(spec);
    REQUIRE(gen.crawls.size() >= 50);
    for (std::size_t i = 0; i < 50; ++i) {
      const auto g = build_graph(gen.crawls[i]);
      const auto stats = graph_stats(g);
      std::map<NodeKind, std::size_t> nodes;
      std::map<EdgeKind, std::size_t> edges;
      for (const auto& n : g.nodes()) nodes[n.kind] += 1;
      for (const auto& e : g.edges()) edges[e.kind] += 1;
      for (std::size_t k = 0; k < kNodeKindCount; ++k) {
        CHECK(stats.node_count(static_cast<NodeKind>(k)) == nodes[static_cast<NodeKind>(k)]);
      }
      for (std::size_t k = 0; k < kEdgeKindCount; ++k) {
        CHECK(stats.edge_count(static_cast<EdgeKind>(k)) == edges[static_cast<EdgeKind>(k)]);
      }
      CHECK(stats.chain_length == edges[EdgeKind::Redirect] + 1);
    }
  }

  TEST_CASE("properties over generated crawls: determinism, uniqueness, redirect path") {
    auto spec = default_generator_spec();
    spec.n_videos = 120;
    spec.seed = 99;
    for (const auto& r : generate_corpus(spec).crawls) {
      const auto g = build_graph(r);
      CHECK(g == build_graph(r));
      CHECK(check_graph(g).empty());
      std::set<std::pair<NodeKind, std::string>> seen;
      for (const auto& n : g.nodes()) CHECK(seen.emplace(n.kind, n.label).second);
      std::map<int, int> in, out;
      std::size_t redirects = 0;
      for (const auto& e : g.edges()) {
        if (e.kind != EdgeKind::Redirect) continue;
        ++redirects;
        CHECK(g.nodes()[e.src].kind == NodeKind::Network);
        CHECK(g.nodes()[e.dst].kind == NodeKind::Network);
        ++out[e.src];
        ++in[e.dst];
      }
      CHECK(redirects == graph_stats(g).chain_length - 1);
      for (const auto& [node, d] : in) CHECK(d <= 1);
      for (const auto& [node, d] : out) CHECK(d <= 1);
    }
  }

  TEST_CASE("graph_to_json lists nodes and edges") {
    const auto g = build_graph(make_crawl("l1", "v1", {"https://a.com/", "https://b.com/"}));
    const auto text = graph_to_json(g);
    CHECK(text.find("\"link_id\": \"l1\"") != std::string::npos);
    CHECK(text.find("Redirect") != std::string::npos);
  }
}
