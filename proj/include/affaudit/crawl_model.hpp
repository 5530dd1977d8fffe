#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "affaudit/url.hpp"

namespace affaudit {

inline constexpr int kCrawlSchemaVersion = 1;

enum class Category {
  AutosVehicles,
  Comedy,
  Education,
  Entertainment,
  FilmAnimation,
  Gaming,
  HowtoStyle,
  Music,
  NewsPolitics,
  NonprofitsActivism,
  PeopleBlogs,
  PetsAnimals,
  ScienceTechnology,
  Sports,
  TravelEvents,
  Shows,
};
inline constexpr std::size_t kCategoryCount = 16;

enum class SourceTag { Reddit, Random, Trending, Shopping };
enum class NavigationKind { HttpRedirect, JsNavigation, MetaRefresh };
enum class StorageAction { Read, Write };
enum class OriginLocation { Description, ShoppingShelf };

std::string_view to_string(Category c);
std::string_view to_string(SourceTag s);
std::string_view to_string(NavigationKind k);
std::string_view to_string(StorageAction a);
std::string_view to_string(OriginLocation o);
std::optional<Category> parse_category(std::string_view s);
std::optional<SourceTag> parse_source_tag(std::string_view s);
std::optional<NavigationKind> parse_navigation_kind(std::string_view s);
std::optional<StorageAction> parse_storage_action(std::string_view s);
std::optional<OriginLocation> parse_origin_location(std::string_view s);

using Date = std::chrono::year_month_day;
std::string format_date(Date d);
std::optional<Date> parse_date(std::string_view s);

struct VideoMeta {
  std::string video_id;
  std::string channel_id;
  Date upload_date{};
  Category category = Category::Entertainment;
  std::uint64_t subscriber_count = 0;
  SourceTag source_tag = SourceTag::Random;
  std::string description_text;
  std::string language_tag;

  bool operator==(const VideoMeta&) const = default;
};

struct RedirectEvent {
  int sequence_index = 0;
  std::string source_url;
  std::string target_url;
  NavigationKind status_class = NavigationKind::HttpRedirect;
  std::vector<QueryParam> query_params;

  bool operator==(const RedirectEvent&) const = default;
};

// `hop` places an event on the visited-URL chain: 0 is original_url, i + 1
// is the target of redirect i. -1 means the producer did not record it.
struct StorageEvent {
  std::string actor_origin;
  std::string storage_key;
  std::string storage_value;
  StorageAction action = StorageAction::Write;
  int hop = -1;

  bool operator==(const StorageEvent&) const = default;
};

struct DomHook {
  std::string element_name;
  std::string class_id;
  int hop = -1;

  bool operator==(const DomHook&) const = default;
};

struct JsCall {
  std::string function_name;
  int hop = -1;

  bool operator==(const JsCall&) const = default;
};

struct CrawlRecord {
  std::string link_id;
  std::string video_id;
  OriginLocation origin_location = OriginLocation::Description;
  std::string original_url;
  std::vector<RedirectEvent> redirects;
  std::vector<StorageEvent> storage_events;
  std::vector<DomHook> dom_hooks;
  std::vector<JsCall> js_calls;
  std::string landing_url;

  /// Number of URLs visited: redirects + 1.
  std::size_t hop_count() const { return redirects.size() + 1; }
  /// URL visited at `hop` (0 = original_url).
  const std::string& url_at_hop(std::size_t hop) const;

  bool operator==(const CrawlRecord&) const = default;
};

/// Validated, immutable collection of videos and crawl records.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<VideoMeta> videos, std::vector<CrawlRecord> crawls);

  const std::vector<VideoMeta>& videos() const { return videos_; }
  const std::vector<CrawlRecord>& crawls() const { return crawls_; }
  const VideoMeta* find_video(std::string_view video_id) const;
  const CrawlRecord* find_crawl(std::string_view link_id) const;
  /// Crawl record indexes belonging to `video_id`, in corpus order.
  std::vector<std::size_t> crawls_of(std::string_view video_id) const;
  bool empty() const { return videos_.empty() && crawls_.empty(); }

  bool operator==(const Corpus& other) const {
    return videos_ == other.videos_ && crawls_ == other.crawls_;
  }

 private:
  std::vector<VideoMeta> videos_;
  std::vector<CrawlRecord> crawls_;
  std::unordered_map<std::string, std::size_t> video_index_;
  std::unordered_map<std::string, std::size_t> crawl_index_;
  std::unordered_map<std::string, std::vector<std::size_t>> video_crawls_;
};

struct SchemaViolation {
  std::size_t line = 0;  // 1-based; 0 for corpus-level problems
  std::string field_path;
  std::string message;
};

std::string describe(const SchemaViolation& v);

class IngestError : public std::runtime_error {
 public:
  explicit IngestError(const std::string& what) : std::runtime_error(what) {}
  IngestError(SchemaViolation v) : std::runtime_error(describe(v)), violation_(std::move(v)) {}
  const std::optional<SchemaViolation>& violation() const { return violation_; }

 private:
  std::optional<SchemaViolation> violation_;
};

struct IngestOptions {
  bool strict = false;
  Date min_upload_date{std::chrono::year{2015}, std::chrono::January, std::chrono::day{1}};
  Date max_upload_date{std::chrono::year{2024}, std::chrono::December, std::chrono::day{31}};
};

struct IngestResult {
  Corpus corpus;
  std::vector<SchemaViolation> violations;
};

/// Reads line-delimited JSON records ("kind" = "video" | "crawl"). URLs are
/// normalized on the way in. Strict mode throws IngestError on the first
/// violation; lenient mode drops offending lines and reports them.
IngestResult ingest_corpus(const std::string& path, const IngestOptions& options = {});
IngestResult ingest_stream(std::istream& in, const IngestOptions& options = {});

void write_corpus(const Corpus& corpus, std::ostream& out);
std::string serialize_video(const VideoMeta& v);
std::string serialize_crawl(const CrawlRecord& r);

struct ExtractedLink {
  std::string url;
  std::size_t offset = 0;  // byte offset into the UTF-8 text

  bool operator==(const ExtractedLink&) const = default;
};

/// Every absolute http(s) URL in `text`, left to right, duplicates kept.
/// Trailing sentence punctuation is not part of the URL.
std::vector<ExtractedLink> extract_hyperlinks(std::string_view text);

}  // namespace affaudit
