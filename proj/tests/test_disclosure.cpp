#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <vector>

#include "affaudit/crawl_model.hpp"
#include "affaudit/disclosure.hpp"
#include "affaudit/rng.hpp"

using namespace affaudit;

namespace {

std::vector<DescribedLink> links_in(const std::string& text, const std::vector<bool>& affiliate) {
  std::vector<DescribedLink> out;
  const auto found = extract_hyperlinks(text);
  REQUIRE(found.size() == affiliate.size());
  for (std::size_t i = 0; i < found.size(); ++i) out.push_back({found[i].url, found[i].offset, affiliate[i]});
  return out;
}

std::vector<DisclosureSegment> detect(const std::string& text, const std::vector<bool>& affiliate,
                                      std::string_view classifier = "rules") {
  auto c = make_classifier(classifier);
  const auto sentences = segment_sentences(text);
  return detect_disclosures(text, sentences, links_in(text, affiliate), *c);
}

std::vector<AnnotationPair> confusion(std::size_t yy, std::size_t yn, std::size_t ny, std::size_t nn) {
  std::vector<AnnotationPair> out;
  auto add = [&](std::size_t n, const char* a, const char* b) {
    for (std::size_t i = 0; i < n; ++i) out.push_back({std::to_string(out.size()), a, b});
  };
  add(yy, "yes", "yes");
  add(yn, "yes", "no");
  add(ny, "no", "yes");
  add(nn, "no", "no");
  return out;
}

}  // namespace

TEST_SUITE("disclosure") {
  TEST_CASE("segment_sentences") {
    CHECK(segment_sentences("").empty());

    SUBCASE("punctuation and line breaks split, URLs stay whole") {
      const std::string text = "Thanks! Links below.\nhttps://a.com?x=1.b";
      const auto s = segment_sentences(text);
      REQUIRE(s.size() == 3);
      CHECK(s[0].text == "Thanks!");
      CHECK(s[1].text == "Links below.");
      CHECK(s[2].text == "https://a.com?x=1.b");
      for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i].index == i);
    }

    SUBCASE("spans are ordered slices and the gaps are whitespace") {
      const std::string text =
          "  Intro line... more?  Yes!\n\n- item one https://x.example/a. Next.\r\nEnd";
      const auto s = segment_sentences(text);
      std::size_t cursor = 0;
      for (const auto& seg : s) {
        CHECK(seg.begin >= cursor);
        CHECK(text.substr(seg.begin, seg.end - seg.begin) == seg.text);
        for (std::size_t i = cursor; i < seg.begin; ++i) {
          CHECK(std::isspace(static_cast<unsigned char>(text[i])));
        }
        cursor = seg.end;
      }
      for (std::size_t i = cursor; i < text.size(); ++i) CHECK(std::isspace(static_cast<unsigned char>(text[i])));
    }
  }

  TEST_CASE("detection and merging") {
    CHECK(detect("Check out my new video", {}).empty());

    const auto one = detect(
        "If you click on this link and purchase a product, I get a small commission at no cost to you",
        {});
    REQUIRE(one.size() == 1);
    CHECK(one[0].compensation == Compensation::Clear);
    CHECK(one[0].vacuous_relationship);

    const auto merged = detect("These are affiliate links. I earn a commission from them. Enjoy!", {});
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].sentence_indexes == std::vector<std::size_t>{0, 1});
    CHECK(merged[0].text == "These are affiliate links. I earn a commission from them.");
    CHECK(merged[0].classifier_id == "reference_rules");
  }

  TEST_CASE("compensation labels") {
    const auto& r = default_rules();
    CHECK(r.compensation("I get a small commission at no cost to you") == Compensation::Clear);
    CHECK(r.compensation("Support the channel through these links.") == Compensation::Ambiguous);
    CHECK(r.compensation("This is an affiliate link.") == Compensation::None);
    CHECK(r.compensation("As an Amazon Associate I earn from qualifying purchases.") ==
          Compensation::Clear);
  }

  TEST_CASE("relationship labels") {
    SUBCASE("single affiliate link directly below: Explicit") {
      const std::string text = "This is a sponsored link for X:\nhttps://shop.example/x";
      const auto segs = detect(text, {true});
      REQUIRE(segs.size() == 1);
      CHECK(segs[0].relationship == Relationship::Explicit);
      CHECK_FALSE(segs[0].vacuous_relationship);
    }
    SUBCASE("statement above three affiliate links: Grouped") {
      const std::string text =
          "I get compensated when you make purchases through the following links:\n"
          "Mic https://a.example/1\nCam https://b.example/2\nLight https://c.example/3";
      const auto segs = detect(text, {true, true, true});
      REQUIRE(segs.size() == 1);
      CHECK(segs[0].relationship == Relationship::Grouped);
    }
    SUBCASE("whole-description scope: MixedGroup") {
      const std::string text =
          "Some of the links in the description are affiliate links.\n\n"
          "Mic https://a.example/1\nMy site https://me.example/";
      const auto segs = detect(text, {true, false});
      REQUIRE(segs.size() == 1);
      CHECK(segs[0].relationship == Relationship::MixedGroup);
    }
    SUBCASE("block mixing affiliate and other links: MixedGroup") {
      const std::string text = "Affiliate links below:\nhttps://a.example/1\nhttps://me.example/";
      const auto segs = detect(text, {true, false});
      REQUIRE(segs.size() == 1);
      CHECK(segs[0].relationship == Relationship::MixedGroup);
    }
    SUBCASE("inline note on the link's own line: Explicit") {
      const std::string text =
          "Gear:\nMic https://a.example/1 (affiliate link)\nCam https://b.example/2";
      const auto segs = detect(text, {true, true});
      REQUIRE_FALSE(segs.empty());
      CHECK(segs.back().relationship == Relationship::Explicit);
    }
  }

  TEST_CASE("keyword baseline") {
    CHECK(keyword_baseline("#ad"));
    CHECK(keyword_baseline("This video is SPONSORED by a VPN"));
    CHECK(keyword_baseline("affiliate link: https://x.example"));
    CHECK_FALSE(keyword_baseline("great gadget review"));
    CHECK_FALSE(keyword_baseline("my adventure starts here"));  // "ad" only on word boundaries
    const std::vector<std::string> kw{"#ad", "partner link"};
    CHECK(keyword_match("this is a Partner Link.", kw));
    CHECK_FALSE(keyword_match("#adventure", kw));
  }

  TEST_CASE("classifier interchangeability keeps merge and label invariants") {
    const std::string text =
        "New video! This post contains affiliate links. Sponsored by nobody.\n"
        "As an Amazon Associate I earn from qualifying purchases.\n"
        "Mic https://a.example/1\nCam https://b.example/2\n\nFollow me https://me.example/ #ad";
    const std::vector<std::pair<std::string, std::string>> classifiers{{"rules", "reference_rules"},
                                                                       {"keywords", "keyword_baseline"}};
    for (const auto& [name, id] : classifiers) {
      const auto segs = detect(text, {true, true, false}, name);
      for (std::size_t i = 0; i < segs.size(); ++i) {
        const auto& ix = segs[i].sentence_indexes;
        REQUIRE_FALSE(ix.empty());
        for (std::size_t k = 1; k < ix.size(); ++k) CHECK(ix[k] == ix[k - 1] + 1);
        if (i) CHECK(segs[i].sentence_indexes.front() > segs[i - 1].sentence_indexes.back() + 1);
        CHECK(segs[i].classifier_id == id);
      }
    }
  }

  TEST_CASE("batch detection equals per-description detection") {
    const std::vector<std::string> texts = {
        "I earn a commission on these links:\nhttps://a.example/1", "Nothing here.",
        "Support the channel with the links below!\nhttps://a.example/1\nhttps://b.example/2"};
    std::vector<DescriptionInput> inputs;
    const std::vector<std::vector<bool>> flags = {{true}, {}, {true, true}};
    for (std::size_t i = 0; i < texts.size(); ++i) inputs.push_back({texts[i], links_in(texts[i], flags[i])});
    auto c = make_classifier("rules");
    const auto batch = detect_disclosures_batch(inputs, *c);
    REQUIRE(batch.size() == 3);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      const auto single = detect(texts[i], flags[i]);
      REQUIRE(batch[i].size() == single.size());
      for (std::size_t k = 0; k < single.size(); ++k) {
        CHECK(batch[i][k].text == single[k].text);
        CHECK(batch[i][k].compensation == single[k].compensation);
        CHECK(batch[i][k].relationship == single[k].relationship);
      }
    }
  }

  TEST_CASE("video aggregation takes the most compliant label") {
    std::vector<DisclosureSegment> segs(2);
    segs[0].compensation = Compensation::Ambiguous;
    segs[0].relationship = Relationship::MixedGroup;
    segs[1].compensation = Compensation::Clear;
    segs[1].relationship = Relationship::Grouped;
    auto v = aggregate_video(segs);
    CHECK(v.compensation == Compensation::Clear);
    CHECK(v.relationship == Relationship::Grouped);
    segs[1].compensation = Compensation::None;
    segs[1].relationship = Relationship::MixedGroup;
    v = aggregate_video(segs);
    CHECK(v.compensation == Compensation::Ambiguous);
    CHECK(v.relationship == Relationship::MixedGroup);
    CHECK_FALSE(aggregate_video({}).compensation);
  }

  TEST_CASE("external classifier protocol") {
    auto ext = make_classifier(
        "external:awk -F'\\t' '{ if ($1 == \"detect\") print (index($2, \"commission\") ? "
        "\"disclosure\" : \"non-disclosure\"); else print \"Clear\" }'");
    const std::vector<std::string> sentences{"I earn a commission.", "Hello", "tab\there"};
    CHECK(ext->detect(sentences) == std::vector<bool>{true, false, false});
    CHECK(ext->compensation(sentences) ==
          std::vector<Compensation>{Compensation::Clear, Compensation::Clear, Compensation::Clear});
    CHECK(ext->detect({}).empty());

    auto failing = make_classifier("external:exit 3");
    CHECK_THROWS_AS(failing->detect(sentences), DisclosureError);
    auto short_answer = make_classifier("external:head -n 1 >/dev/null; echo disclosure");
    CHECK_THROWS_AS(short_answer->detect(sentences), DisclosureError);
    auto bad_label = make_classifier("external:sed 's/.*/maybe/'");
    CHECK_THROWS_AS(bad_label->detect(sentences), DisclosureError);
    CHECK_THROWS_AS(make_classifier("bert"), DisclosureError);
  }

  TEST_CASE("cohens_kappa") {
    CHECK(cohens_kappa(confusion(10, 0, 0, 7)) == 1.0);
    CHECK(cohens_kappa(confusion(20, 5, 10, 15)) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(cohens_kappa(confusion(6, 0, 0, 0)) == 1.0);
    CHECK_THROWS_AS(cohens_kappa({}), DisclosureError);

    SUBCASE("symmetric in rater roles and invariant under relabeling") {
      auto pairs = confusion(13, 4, 7, 9);
      pairs.push_back({"x", "maybe", "no"});
      const double k = cohens_kappa(pairs);
      auto swapped = pairs;
      for (auto& p : swapped) std::swap(p.label_a, p.label_b);
      CHECK(cohens_kappa(swapped) == doctest::Approx(k).epsilon(1e-12));
      auto renamed = pairs;
      for (auto& p : renamed) {
        for (auto* s : {&p.label_a, &p.label_b}) *s = *s == "yes" ? "Q" : *s == "no" ? "R" : "S";
      }
      CHECK(cohens_kappa(renamed) == doctest::Approx(k).epsilon(1e-12));
    }

    SUBCASE("independent labels give kappa near 0") {
      SplitMix64 rng(17);
      std::vector<AnnotationPair> pairs;
      for (int i = 0; i < 20000; ++i) {
        pairs.push_back({std::to_string(i), uniform_below(rng, 3) ? "a" : "b",
                         uniform_below(rng, 2) ? "a" : "b"});
      }
      CHECK(std::abs(cohens_kappa(pairs)) < 0.03);
    }
  }

  TEST_CASE("language gate") {
    CHECK(is_english("en"));
    CHECK(is_english("EN-gb"));
    CHECK_FALSE(is_english("de"));
    CHECK_FALSE(is_english("eng"));
    CHECK_FALSE(is_english(""));
  }
}
