#include <doctest.h>

#include "affaudit/url.hpp"

using namespace affaudit;

TEST_SUITE("url") {
  TEST_CASE("parse_url lowercases scheme and host and drops default ports") {
    const auto u = parse_url("HTTPS://WWW.Amazon.COM:443/dp/B01?tag=chan-20&x=1#top");
    REQUIRE(u);
    CHECK(u->scheme == "https");
    CHECK(u->host == "www.amazon.com");
    CHECK(u->port == -1);
    CHECK(u->path == "/dp/B01");
    REQUIRE(u->query.size() == 2);
    CHECK(u->query[0] == QueryParam{"tag", "chan-20"});
    CHECK(u->query[1] == QueryParam{"x", "1"});
    CHECK(u->fragment == "top");
    CHECK(u->origin() == "https://www.amazon.com");
  }

  TEST_CASE("non-default ports are kept") {
    const auto u = parse_url("http://localhost:8080/a");
    REQUIRE(u);
    CHECK(u->port == 8080);
    CHECK(u->origin() == "http://localhost:8080");
  }

  TEST_CASE("relative references, empty hosts and bad ports are rejected") {
    CHECK_FALSE(parse_url("/just/a/path"));
    CHECK_FALSE(parse_url("amazon.com/dp/B01"));
    CHECK_FALSE(parse_url("https:///nohost"));
    CHECK_FALSE(parse_url("https://host:99999/"));
    CHECK_FALSE(parse_url("https://host:abc/"));
    CHECK_FALSE(parse_url(""));
  }

  TEST_CASE("normalize_url keeps query order and is idempotent") {
    const auto once = normalize_url("HTTP://Shop.Example:80?b=2&a=1");
    REQUIRE(once);
    CHECK(*once == "http://shop.example/?b=2&a=1");
    CHECK(normalize_url(*once) == once);
  }

  TEST_CASE("is_valid_origin accepts bare origins only") {
    CHECK(is_valid_origin("https://a.example"));
    CHECK(is_valid_origin("http://a.example:8080"));
    CHECK_FALSE(is_valid_origin("https://a.example/path"));
    CHECK_FALSE(is_valid_origin("a.example"));
  }

  TEST_CASE("registrable_host strips one leading www") {
    CHECK(registrable_host(*parse_url("https://www.amazon.com/")) == "amazon.com");
    CHECK(registrable_host(*parse_url("https://go.clickhub.example/")) == "go.clickhub.example");
  }

  TEST_CASE("parse_query handles empty values and bare keys") {
    const auto q = parse_query("a=1&b=&c&=d");
    REQUIRE(q.size() == 4);
    CHECK(q[0] == QueryParam{"a", "1"});
    CHECK(q[1] == QueryParam{"b", ""});
    CHECK(q[2] == QueryParam{"c", ""});
    CHECK(q[3] == QueryParam{"", "d"});
    CHECK(parse_query("").empty());
  }
}
