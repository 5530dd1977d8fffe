#include <doctest.h>

#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "affaudit/fixtures.hpp"
#include "affaudit/url.hpp"

using namespace affaudit;

namespace {

GeneratorSpec small_spec(std::size_t n_videos, std::uint64_t seed) {
  auto s = default_generator_spec();
  s.n_videos = n_videos;
  s.seed = seed;
  return s;
}

std::string corpus_text(const GeneratedCorpus& g) {
  std::ostringstream out;
  for (const auto& v : g.videos) out << serialize_video(v) << '\n';
  for (const auto& c : g.crawls) out << serialize_crawl(c) << '\n';
  return out.str();
}

}  // namespace

TEST_SUITE("fixtures") {
  TEST_CASE("largest-remainder allocation") {
    const RowWeights third{1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 0, 0, 0};
    const auto a = allocate_rows(third, 10);
    CHECK(a[0] == 4);  // the tie in remainders goes to the lowest index
    CHECK(a[1] == 3);
    CHECK(a[2] == 3);
    const auto d = default_generator_spec().row_weights;
    for (const std::size_t n : {0u, 1u, 7u, 99u, 735u, 10000u}) {
      const auto rows = allocate_rows(d, n);
      CHECK(std::accumulate(rows.begin(), rows.end(), std::size_t{0}) == n);
      for (std::size_t i = 0; i < kScriptRowCount; ++i) {
        const double exact = d[i] * static_cast<double>(n);
        CHECK(static_cast<double>(rows[i]) > exact - 1.0);
        CHECK(static_cast<double>(rows[i]) < exact + 1.0);
      }
    }
  }

  TEST_CASE("generated truth follows the row weights exactly") {
    auto s = small_spec(1000, 5);
    s.affiliate_video_rate = 1.0;
    s.english_rate = 1.0;
    s.row_weights_by_source.clear();
    s.row_weights_guidance.reset();
    const auto g = generate_corpus(s);
    const auto want = allocate_rows(s.row_weights, 1000);
    std::array<std::size_t, kScriptRowCount> got{};
    std::map<ComplianceStatus, std::size_t> status;
    for (const auto& t : g.truth) {
      REQUIRE(t.row.has_value());
      ++got[static_cast<std::size_t>(*t.row)];
      ++status[t.record.status];
    }
    CHECK(got == want);
    CHECK(status[ComplianceStatus::CC] == want[0]);
    CHECK(status[ComplianceStatus::PC] == want[1] + want[2] + want[3]);
    CHECK(status[ComplianceStatus::NC] == want[4] + want[5] + want[6]);
  }

  TEST_CASE("no affiliate videos means no affiliate links") {
    auto s = small_spec(90, 2);
    s.affiliate_video_rate = 0.0;
    const auto g = generate_corpus(s);
    CHECK(g.videos.size() == 90);
    for (const auto& l : g.links) CHECK_FALSE(l.affiliate);
    for (const auto& t : g.truth) CHECK_FALSE(t.record.is_affiliate_video);
  }

  TEST_CASE("truth labels agree with the independent flow check") {
    const auto g = generate_corpus(small_spec(300, 17));
    CHECK(validate_truth(g).empty());
    std::size_t aff = 0;
    for (const auto& l : g.links) aff += l.affiliate;
    CHECK(aff > 0);
    CHECK(aff < g.links.size());
  }

  TEST_CASE("generated corpora pass strict ingest and round-trip") {
    const auto g = generate_corpus(small_spec(150, 3));
    std::istringstream in(corpus_text(g));
    IngestOptions opt;
    opt.strict = true;
    const auto r = ingest_stream(in, opt);
    CHECK(r.violations.empty());
    CHECK(r.corpus.videos().size() == g.videos.size());
    CHECK(r.corpus.crawls().size() == g.crawls.size());
    std::set<std::string> ids;
    for (const auto& l : g.links) ids.insert(l.link_id);
    CHECK(ids.size() == g.crawls.size());
  }

  TEST_CASE("same GeneratorSpec, same corpus") {
    const auto a = generate_corpus(small_spec(120, 8));
    const auto b = generate_corpus(small_spec(120, 8));
    CHECK(corpus_text(a) == corpus_text(b));
    CHECK(a.truth == b.truth);
    CHECK(corpus_text(a) != corpus_text(generate_corpus(small_spec(120, 9))));
  }

  TEST_CASE("truth file round trip") {
    const auto g = generate_corpus(small_spec(60, 4));
    std::stringstream io;
    write_truth(io, g);
    const auto t = read_truth(io);
    CHECK(t.links.size() == g.links.size());
    CHECK(t.videos.size() == g.truth.size());
    for (const auto& l : g.links) CHECK(t.links.at(l.link_id) == l);
    for (const auto& v : g.truth) CHECK(t.videos.at(v.record.video_id) == v);
    std::istringstream bad(R"({"kind":"galaxy"})" "\n");
    CHECK_THROWS_AS(read_truth(bad), FixtureError);
  }

  TEST_CASE("generator settings validation") {
    CHECK_NOTHROW(parse_generator_spec(R"({"n_videos":10})"));
    CHECK_THROWS_AS(parse_generator_spec(R"({"n_video":10})"), FixtureError);
    CHECK_THROWS_AS(parse_generator_spec(R"({"english_rate":1.5})"), FixtureError);
    try {
      parse_generator_spec(R"({"row_weights":[0.5,0.5,0.5,0,0,0,0]})");
      FAIL("expected an infeasible distribution");
    } catch (const FixtureError& e) {
      CHECK(std::string(e.what()).find("infeasible distribution") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_generator_spec(R"({"row_weights":[1.2,-0.2,0,0,0,0,0]})"), FixtureError);
    CHECK_THROWS_AS(parse_generator_spec(R"({"row_weights_by_source":{"Mars":[1,0,0,0,0,0,0]}})"), FixtureError);
    auto s = default_generator_spec();
    s.partners.clear();
    CHECK_THROWS_AS(validate_spec(s), FixtureError);
  }

  TEST_CASE("partner lookup by host") {
    const auto& ps = default_partners();
    REQUIRE(partner_for_host(ps, "amzn.to") != nullptr);
    CHECK(partner_for_host(ps, "amzn.to")->id == "amazon");
    CHECK(partner_for_host(ps, "amazon.com")->id == "amazon");
    CHECK(partner_for_host(ps, "www.amazon.com")->id == "amazon");
    CHECK(partner_for_host(ps, "kitchenary.example")->id == "linkrail");
    CHECK(partner_for_host(ps, "example.org") == nullptr);
    CHECK_THROWS_AS(parse_partners(R"({"partners":[{"id":"x","style":"ring"}]})"), FixtureError);
  }

  TEST_CASE("script row names") {
    for (std::size_t i = 0; i < kScriptRowCount; ++i) {
      const auto r = static_cast<ScriptRow>(i);
      CHECK(parse_script_row(to_string(r)) == r);
    }
    CHECK_FALSE(parse_script_row("Nope").has_value());
  }
}
