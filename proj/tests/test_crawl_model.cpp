#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <string>

#include "affaudit/crawl_model.hpp"
#include "affaudit/fixtures.hpp"
#include "support/records.hpp"

using namespace affaudit;
using testsupport::make_crawl;
using testsupport::make_video;

namespace {

IngestResult ingest_text(const std::string& text, bool strict = false) {
  std::istringstream in(text);
  IngestOptions opts;
  opts.strict = strict;
  return ingest_stream(in, opts);
}

std::string lines(const std::vector<std::string>& ls) {
  std::string out;
  for (const auto& l : ls) out += l + "\n";
  return out;
}

// Replaces the first occurrence of `from` in `text`.
std::string patch(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

}  // namespace

TEST_SUITE("crawl_model") {
  TEST_CASE("empty input gives an empty corpus and no violations") {
    const auto r = ingest_text("");
    CHECK(r.corpus.empty());
    CHECK(r.violations.empty());
    const auto blank = ingest_text("\n   \n\n", true);
    CHECK(blank.corpus.empty());
  }

  TEST_CASE("100 lines with one malformed line: 99 records and one violation at that line") {
    std::vector<std::string> ls;
    for (int v = 0; v < 20; ++v) ls.push_back(serialize_video(make_video("v" + std::to_string(v))));
    for (int c = 0; c < 80; ++c) {
      ls.push_back(serialize_crawl(make_crawl("l" + std::to_string(c), "v" + std::to_string(c % 20),
                                              {"https://a.example/x", "https://b.example/y"})));
    }
    REQUIRE(ls.size() == 100);
    ls[56] = ls[56].substr(0, ls[56].size() / 2);  // truncated JSON on line 57
    const auto r = ingest_text(lines(ls));
    CHECK(r.corpus.videos().size() + r.corpus.crawls().size() == 99);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].line == 57);
    CHECK_THROWS_AS(ingest_text(lines(ls), true), IngestError);
  }

  TEST_CASE("landing mismatch is a violation") {
    auto crawl = make_crawl("l1", "v1", {"https://a.example/", "https://b.example/"});
    crawl.landing_url = "https://c.example/";
    const auto r = ingest_text(lines({serialize_video(make_video("v1")), serialize_crawl(crawl)}));
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].field_path == "landing_url");
    CHECK(r.violations[0].message == "landing mismatch");
    CHECK(r.corpus.crawls().empty());
  }

  TEST_CASE("strict mode names the line and field of the first violation") {
    const auto text = lines({serialize_video(make_video("v1")),
                             patch(serialize_video(make_video("v2")), "\"Reddit\"", "\"Radio\"")});
    try {
      ingest_text(text, true);
      FAIL("expected IngestError");
    } catch (const IngestError& e) {
      REQUIRE(e.violation());
      CHECK(e.violation()->line == 2);
      CHECK(e.violation()->field_path == "source_tag");
    }
  }

  TEST_CASE("chain, identity and reference violations") {
    const auto video = serialize_video(make_video("v1"));
    const auto good = make_crawl("l1", "v1",
                                 {"https://a.example/", "https://b.example/", "https://c.example/"});

    SUBCASE("broken contiguity") {
      auto bad = good;
      bad.redirects[1].source_url = "https://z.example/";
      const auto r = ingest_text(lines({video, serialize_crawl(bad)}));
      REQUIRE(r.violations.size() == 1);
      CHECK(r.violations[0].field_path == "redirects[1].source_url");
    }
    SUBCASE("chain must start at the original URL") {
      auto bad = good;
      bad.original_url = "https://other.example/";
      const auto r = ingest_text(lines({video, serialize_crawl(bad)}));
      REQUIRE_FALSE(r.violations.empty());
      CHECK(r.violations[0].field_path == "redirects[0].source_url");
    }
    SUBCASE("non-contiguous sequence index") {
      auto bad = good;
      bad.redirects[1].sequence_index = 5;
      const auto r = ingest_text(lines({video, serialize_crawl(bad)}));
      REQUIRE_FALSE(r.violations.empty());
      CHECK(r.violations[0].field_path == "redirects[1].sequence_index");
    }
    SUBCASE("redirect loop") {
      auto bad = make_crawl("l1", "v1",
                            {"https://a.example/", "https://b.example/", "https://a.example/",
                             "https://b.example/"});
      const auto r = ingest_text(lines({video, serialize_crawl(bad)}));
      REQUIRE_FALSE(r.violations.empty());
      CHECK(r.violations[0].message == "redirect loop");
    }
    SUBCASE("duplicate link id") {
      const auto r = ingest_text(lines({video, serialize_crawl(good), serialize_crawl(good)}));
      REQUIRE(r.violations.size() == 1);
      CHECK(r.violations[0].line == 3);
      CHECK(r.corpus.crawls().size() == 1);
    }
    SUBCASE("dangling video id") {
      const auto r = ingest_text(lines({video, serialize_crawl(make_crawl(
                                                   "l9", "nope", {"https://a.example/"}))}));
      REQUIRE(r.violations.size() == 1);
      CHECK(r.violations[0].line == 2);
      CHECK(r.violations[0].message.find("dangling") != std::string::npos);
    }
    SUBCASE("invalid storage actor origin") {
      auto bad = good;
      bad.storage_events.push_back({"https://a.example/path", "k", "v", StorageAction::Write, 0});
      const auto r = ingest_text(lines({video, serialize_crawl(bad)}));
      REQUIRE_FALSE(r.violations.empty());
      CHECK(r.violations[0].field_path == "storage_events[0].actor_origin");
    }
    SUBCASE("event hop beyond the chain") {
      auto bad = good;
      bad.dom_hooks.push_back({"div", "promo", 7});
      const auto r = ingest_text(lines({video, serialize_crawl(bad)}));
      REQUIRE_FALSE(r.violations.empty());
      CHECK(r.violations[0].field_path == "dom_hooks[0].hop");
    }
    SUBCASE("wrong schema version") {
      const auto r = ingest_text(patch(video, "\"schema_version\":1", "\"schema_version\":2"));
      REQUIRE(r.violations.size() == 1);
      CHECK(r.violations[0].field_path == "schema_version");
    }
    SUBCASE("upload date outside the accepted range") {
      auto v = make_video("v1");
      v.upload_date = std::chrono::year_month_day{std::chrono::year{2012}, std::chrono::May,
                                                  std::chrono::day{1}};
      const auto r = ingest_text(lines({serialize_video(v)}));
      REQUIRE(r.violations.size() == 1);
      CHECK(r.violations[0].field_path == "upload_date");
    }
  }

  TEST_CASE("URLs are normalized on ingest") {
    auto crawl = make_crawl("l1", "v1", {"HTTPS://A.Example:443/x?b=1&a=2"});
    const auto r = ingest_text(lines({serialize_video(make_video("v1")), serialize_crawl(crawl)}));
    REQUIRE(r.violations.empty());
    CHECK(r.corpus.crawls()[0].original_url == "https://a.example/x?b=1&a=2");
    CHECK(r.corpus.crawls()[0].landing_url == "https://a.example/x?b=1&a=2");
  }

  TEST_CASE("shortened links without redirects are kept") {
    const auto r = ingest_text(lines({serialize_video(make_video("v1")),
                                      serialize_crawl(make_crawl("l1", "v1", {"https://bit.ly/3xYz"}))}),
                               true);
    CHECK(r.corpus.crawls().size() == 1);
  }

  TEST_CASE("round trip: write then re-ingest gives an identical corpus") {
    auto spec = default_generator_spec();
    spec.n_videos = 60;
    const auto g = generate_corpus(spec);
    const Corpus corpus(g.videos, g.crawls);
    std::ostringstream out;
    write_corpus(corpus, out);
    const auto again = ingest_text(out.str(), true);
    CHECK(again.violations.empty());
    CHECK(again.corpus == corpus);
    std::ostringstream out2;
    write_corpus(again.corpus, out2);
    CHECK(out2.str() == out.str());
  }

  TEST_CASE("every ingested chain forms a path") {
    auto spec = default_generator_spec();
    spec.n_videos = 80;
    const auto g = generate_corpus(spec);
    for (const auto& r : g.crawls) {
      std::vector<std::string> sources;
      for (const auto& ev : r.redirects) sources.push_back(ev.source_url);
      std::sort(sources.begin(), sources.end());
      CHECK(std::unique(sources.begin(), sources.end()) == sources.end());
      for (std::size_t i = 1; i < r.redirects.size(); ++i) {
        CHECK(r.redirects[i].source_url == r.redirects[i - 1].target_url);
      }
    }
  }

  TEST_CASE("extract_hyperlinks") {
    CHECK(extract_hyperlinks("").empty());

    SUBCASE("duplicates are preserved with ascending offsets") {
      const std::string text = "Buy here https://a.com/x and https://a.com/x";
      const auto links = extract_hyperlinks(text);
      REQUIRE(links.size() == 2);
      CHECK(links[0].url == "https://a.com/x");
      CHECK(links[1].url == "https://a.com/x");
      CHECK(links[0].offset == 9);
      CHECK(links[1].offset == 29);
    }

    SUBCASE("five-link description against hand-counted offsets") {
      // Offsets counted by hand from the literal below.
      const std::string text =
          "Gear:\n"                                   // 0..5
          "Mic https://amzn.to/3abc\n"                // 6: "Mic " -> url at 10
          "Cam: https://www.amazon.com/dp/B0?tag=x-20.\n"  // 31: url at 36
          "(see https://geni.us/cam) and http://shop.example/a?b=c,\n"  // 75: urls at 80, 105
          "bare amazon.com/dp/B1 is not a link; https://x.example";  // 132: url at 169
      const auto links = extract_hyperlinks(text);
      REQUIRE(links.size() == 5);
      CHECK(links[0].url == "https://amzn.to/3abc");
      CHECK(links[0].offset == 10);
      CHECK(links[1].url == "https://www.amazon.com/dp/B0?tag=x-20");
      CHECK(links[1].offset == 36);
      CHECK(links[2].url == "https://geni.us/cam");
      CHECK(links[2].offset == 80);
      CHECK(links[3].url == "http://shop.example/a?b=c");
      CHECK(links[3].offset == 105);
      CHECK(links[4].url == "https://x.example");
      CHECK(links[4].offset == 169);
      for (const auto& l : links) CHECK(text.compare(l.offset, l.url.size(), l.url) == 0);
    }

    SUBCASE("offsets are strictly increasing and point at the URL") {
      auto spec = default_generator_spec();
      spec.n_videos = 40;
      for (const auto& v : generate_corpus(spec).videos) {
        const auto links = extract_hyperlinks(v.description_text);
        for (std::size_t i = 0; i < links.size(); ++i) {
          CHECK(v.description_text.compare(links[i].offset, links[i].url.size(), links[i].url) == 0);
          if (i) CHECK(links[i].offset > links[i - 1].offset);
        }
      }
    }
  }
}
