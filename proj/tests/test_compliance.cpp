#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "affaudit/compliance.hpp"
#include "affaudit/fixtures.hpp"
#include "affaudit/rng.hpp"
#include "support/records.hpp"

using namespace affaudit;

namespace {

// One (compensation, relationship) pairing and the status it must map to.
struct Row {
  CompensationLevel c;
  RelationshipLevel r;
  ComplianceStatus expected;
};

std::vector<VideoComplianceRecord> random_records(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<VideoComplianceRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    VideoComplianceRecord r;
    r.video_id = "v" + std::to_string(i);
    r.channel_id = "c" + std::to_string(uniform_below(rng, n / 3 + 1));
    r.total_link_count = uniform_below(rng, 8);
    r.affiliate_link_count = r.total_link_count == 0 ? 0 : uniform_below(rng, r.total_link_count + 1);
    r.is_affiliate_video = r.affiliate_link_count > 0;
    r.compensation = static_cast<CompensationLevel>(uniform_below(rng, 3));
    r.relationship = static_cast<RelationshipLevel>(uniform_below(rng, 4));
    r.status = map_status(r.compensation, r.relationship);
    r.category = static_cast<Category>(uniform_below(rng, kCategoryCount));
    r.tier = static_cast<ChannelTier>(uniform_below(rng, 3));
    r.source = static_cast<SourceTag>(uniform_below(rng, 4));
    r.period = static_cast<Period>(uniform_below(rng, 2));
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_SUITE("compliance") {
  TEST_CASE("map_status reproduces the seven clarity rows") {
    using C = CompensationLevel;
    using R = RelationshipLevel;
    using S = ComplianceStatus;
    const std::vector<Row> rows = {
        {C::Clear, R::Explicit, S::CC},        {C::Clear, R::Grouped, S::CC},
        {C::Clear, R::MixedGroup, S::PC},      {C::Ambiguous, R::Explicit, S::PC},
        {C::Ambiguous, R::Grouped, S::PC},     {C::Ambiguous, R::MixedGroup, S::PC},
        {C::Absent, R::Explicit, S::NC},       {C::Absent, R::Grouped, S::NC},
        {C::Absent, R::MixedGroup, S::NC},     {C::Absent, R::Absent, S::NC},
        {C::Clear, R::Absent, S::NC},          {C::Ambiguous, R::Absent, S::NC},
    };
    CHECK(rows.size() == 12);  // the full 3 x 4 product
    for (const auto& row : rows) {
      INFO(to_string(row.c), " ", to_string(row.r));
      CHECK(map_status(row.c, row.r) == row.expected);
      CHECK(map_status(row.c, row.r) == map_status(row.c, row.r));
    }
  }

  TEST_CASE("disclosure labels map to clarity levels") {
    CHECK(compensation_level(Compensation::Clear) == CompensationLevel::Clear);
    CHECK(compensation_level(Compensation::Ambiguous) == CompensationLevel::Ambiguous);
    CHECK(compensation_level(Compensation::None) == CompensationLevel::Absent);
    CHECK(compensation_level(std::nullopt) == CompensationLevel::Absent);
    CHECK(relationship_level(Relationship::Grouped) == RelationshipLevel::Grouped);
    CHECK(relationship_level(std::nullopt) == RelationshipLevel::Absent);
  }

  TEST_CASE("tier and period boundaries") {
    using namespace std::chrono;
    CHECK(tier_of(0) == ChannelTier::T1);
    CHECK(tier_of(99'999) == ChannelTier::T1);
    CHECK(tier_of(100'000) == ChannelTier::T2);
    CHECK(tier_of(999'999) == ChannelTier::T2);
    CHECK(tier_of(1'000'000) == ChannelTier::T3);
    CHECK(period_of(year_month_day{year{2017}, December, day{31}}) == Period::Pre2018);
    CHECK(period_of(year_month_day{year{2018}, January, day{1}}) == Period::Post2018);
  }

  TEST_CASE("4 videos with 2 affiliate gives AV 50") {
    std::vector<VideoComplianceRecord> recs;
    for (int i = 0; i < 4; ++i) {
      auto r = testsupport::make_record("v" + std::to_string(i), ComplianceStatus::CC);
      if (i >= 2) {
        r.is_affiliate_video = false;
        r.affiliate_link_count = 0;
      }
      r.channel_id = i % 2 ? "a" : "b";
      recs.push_back(r);
    }
    const auto m = compute_metrics(recs, {});
    REQUIRE(m.size() == 1);
    CHECK(m[0].av == 50.0);
    CHECK(m[0].ac == 100.0);
    CHECK(m[0].n_affiliate_videos == 2);
  }

  TEST_CASE("groups without affiliate videos report absent shares") {
    auto r = testsupport::make_record("v", ComplianceStatus::NC);
    r.is_affiliate_video = false;
    r.affiliate_link_count = 0;
    const auto m = compute_metrics(std::vector{r}, {});
    CHECK_FALSE(m[0].cc);
    CHECK_FALSE(m[0].nalpv);
    CHECK(m[0].av == 0.0);
    CHECK_THROWS_AS(compute_metrics({}, {}), ComplianceError);
  }

  TEST_CASE("Row-proportioned 10,000 records give CC 12.20, PC 18.61, NC 69.19") {
    const RowWeights w{0.1220, 0.0931, 0.0295, 0.0635, 0.1232, 0.0268, 0.5419};
    const auto counts = allocate_rows(w, 10'000);
    using C = CompensationLevel;
    using R = RelationshipLevel;
    const std::array<std::pair<C, R>, 7> cells = {{{C::Clear, R::Explicit},
                                                   {C::Clear, R::MixedGroup},
                                                   {C::Ambiguous, R::Grouped},
                                                   {C::Ambiguous, R::MixedGroup},
                                                   {C::Absent, R::Explicit},
                                                   {C::Absent, R::MixedGroup},
                                                   {C::Absent, R::Absent}}};
    std::vector<VideoComplianceRecord> recs;
    for (std::size_t row = 0; row < 7; ++row) {
      for (std::size_t i = 0; i < counts[row]; ++i) {
        auto r = testsupport::make_record("v" + std::to_string(recs.size()), ComplianceStatus::NC);
        r.compensation = cells[row].first;
        r.relationship = cells[row].second;
        r.status = map_status(r.compensation, r.relationship);
        recs.push_back(r);
      }
    }
    REQUIRE(recs.size() == 10'000);
    const auto m = compute_metrics(recs, {});
    CHECK(std::abs(*m[0].cc - 12.20) <= 0.01);
    CHECK(std::abs(*m[0].pc - 18.61) <= 0.01);
    CHECK(std::abs(*m[0].nc - 69.19) <= 0.01);
  }

  TEST_CASE("random 500 records: every metric equals a brute-force recount") {
    const auto recs = random_records(500, 5);
    const std::vector<GroupDimension> dims{GroupDimension::Source, GroupDimension::Period};
    const auto reports = compute_metrics(recs, dims);
    std::size_t covered = 0;
    for (const auto& m : reports) {
      std::size_t videos = 0, aff = 0, cc = 0, pc = 0, nc = 0;
      double links = 0, frac = 0;
      std::set<std::string> channels, aff_channels;
      for (const auto& r : recs) {
        if (std::string(to_string(r.source)) != m.key[0] || std::string(to_string(r.period)) != m.key[1]) {
          continue;
        }
        ++videos;
        channels.insert(r.channel_id);
        if (!r.is_affiliate_video) continue;
        ++aff;
        aff_channels.insert(r.channel_id);
        links += r.affiliate_link_count;
        frac += static_cast<double>(r.affiliate_link_count) / r.total_link_count;
        cc += r.status == ComplianceStatus::CC;
        pc += r.status == ComplianceStatus::PC;
        nc += r.status == ComplianceStatus::NC;
      }
      covered += videos;
      CHECK(m.n_videos == videos);
      CHECK(m.n_channels == channels.size());
      CHECK(m.av == doctest::Approx(100.0 * aff / videos).epsilon(1e-12));
      CHECK(m.ac == doctest::Approx(100.0 * aff_channels.size() / channels.size()).epsilon(1e-12));
      REQUIRE(aff > 0);
      CHECK(*m.nalpv == doctest::Approx(links / aff).epsilon(1e-12));
      CHECK(*m.flal == doctest::Approx(100.0 * frac / aff).epsilon(1e-12));
      CHECK(*m.cc == doctest::Approx(100.0 * cc / aff).epsilon(1e-12));
      CHECK(*m.pc == doctest::Approx(100.0 * pc / aff).epsilon(1e-12));
      CHECK(*m.nc == doctest::Approx(100.0 * nc / aff).epsilon(1e-12));
      CHECK(std::abs(*m.cc + *m.pc + *m.nc - 100.0) <= 0.01);
      CHECK(*m.nalpv >= 1.0);
      CHECK(*m.flal >= 0.0);
      CHECK(*m.flal <= 100.0);
    }
    CHECK(covered == recs.size());
  }

  TEST_CASE("partition additivity: group metrics recombine into the overall metrics") {
    const auto recs = random_records(400, 9);
    const auto overall = compute_metrics(recs, {})[0];
    const std::vector<GroupDimension> dims{GroupDimension::Category};
    double av = 0, cc = 0, nalpv = 0;
    std::size_t videos = 0, aff = 0;
    for (const auto& m : compute_metrics(recs, dims)) {
      videos += m.n_videos;
      aff += m.n_affiliate_videos;
      av += m.av * m.n_videos;
      if (m.cc) {
        cc += *m.cc * m.n_affiliate_videos;
        nalpv += *m.nalpv * m.n_affiliate_videos;
      }
    }
    CHECK(videos == overall.n_videos);
    CHECK(av / videos == doctest::Approx(overall.av).epsilon(1e-12));
    CHECK(cc / aff == doctest::Approx(*overall.cc).epsilon(1e-12));
    CHECK(nalpv / aff == doctest::Approx(*overall.nalpv).epsilon(1e-12));
  }

  TEST_CASE("record validation and serialization") {
    auto r = testsupport::make_record("v1", ComplianceStatus::PC, true);
    validate_record(r);
    CHECK(parse_record(serialize_record(r)) == r);
    std::stringstream io;
    const std::vector<VideoComplianceRecord> recs{r, testsupport::make_record("v2", ComplianceStatus::CC)};
    write_records(io, recs);
    CHECK(read_records(io) == recs);

    auto bad = r;
    bad.status = ComplianceStatus::CC;
    CHECK_THROWS_AS(validate_record(bad), ComplianceError);
    bad = r;
    bad.affiliate_link_count = 5;
    CHECK_THROWS_AS(validate_record(bad), ComplianceError);
    bad = r;
    bad.is_affiliate_video = false;
    CHECK_THROWS_AS(validate_record(bad), ComplianceError);
  }

  TEST_CASE("CSV report has a header and one line per group") {
    const auto recs = random_records(100, 3);
    const std::vector<GroupDimension> dims{GroupDimension::Tier};
    const auto csv = metrics_csv(compute_metrics(recs, dims), dims);
    CHECK(csv.rfind("tier,n_videos,n_channels,n_affiliate_videos,AV,AC,NALPV,FLAL,CC,PC,NC\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(parse_group_dimensions("category, tier") ==
          std::vector<GroupDimension>{GroupDimension::Category, GroupDimension::Tier});
    CHECK(parse_group_dimensions("").empty());
  }

  TEST_CASE("corpus summary counts unique hyperlinks and channels per source") {
    auto v1 = testsupport::make_video("v1", "", SourceTag::Reddit);
    auto v2 = testsupport::make_video("v2", "", SourceTag::Reddit);
    v2.channel_id = v1.channel_id;
    const auto v3 = testsupport::make_video("v3", "", SourceTag::Shopping);
    const Corpus corpus({v1, v2, v3}, {testsupport::make_crawl("a", "v1", {"https://x.example/"}),
                                       testsupport::make_crawl("b", "v2", {"https://x.example/"}),
                                       testsupport::make_crawl("c", "v3", {"https://y.example/"})});
    const auto rows = summarize_corpus(corpus);
    std::map<std::string, SourceSummary> by;
    for (const auto& r : rows) by[r.source] = r;
    CHECK(by["Reddit"].videos == 2);
    CHECK(by["Reddit"].hyperlinks == 1);
    CHECK(by["Reddit"].channels == 1);
    CHECK(by["Shopping"].videos == 1);
  }
}
