#include "affaudit/crawl_model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "affaudit/detail/enum_names.hpp"

namespace affaudit {

using Json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "Autos & Vehicles", "Comedy",          "Education",       "Entertainment",
    "Film & Animation", "Gaming",          "Howto & Style",   "Music",
    "News & Politics",  "Nonprofits & Activism", "People & Blogs", "Pets & Animals",
    "Science & Technology", "Sports",      "Travel & Events", "Shows",
};
constexpr std::array<std::string_view, 4> kSourceNames = {"Reddit", "Random", "Trending",
                                                          "Shopping"};
constexpr std::array<std::string_view, 3> kNavigationNames = {"HttpRedirect", "JsNavigation",
                                                              "MetaRefresh"};
constexpr std::array<std::string_view, 2> kStorageActionNames = {"Read", "Write"};
constexpr std::array<std::string_view, 2> kOriginLocationNames = {"Description",
                                                                  "ShoppingShelf"};

}  // namespace

std::string_view to_string(Category c) { return detail::enum_name(c, kCategoryNames); }
std::string_view to_string(SourceTag s) { return detail::enum_name(s, kSourceNames); }
std::string_view to_string(NavigationKind k) { return detail::enum_name(k, kNavigationNames); }
std::string_view to_string(StorageAction a) { return detail::enum_name(a, kStorageActionNames); }
std::string_view to_string(OriginLocation o) {
  return detail::enum_name(o, kOriginLocationNames);
}
std::optional<Category> parse_category(std::string_view s) {
  return detail::enum_parse<Category>(s, kCategoryNames);
}
std::optional<SourceTag> parse_source_tag(std::string_view s) {
  return detail::enum_parse<SourceTag>(s, kSourceNames);
}
std::optional<NavigationKind> parse_navigation_kind(std::string_view s) {
  return detail::enum_parse<NavigationKind>(s, kNavigationNames);
}
std::optional<StorageAction> parse_storage_action(std::string_view s) {
  return detail::enum_parse<StorageAction>(s, kStorageActionNames);
}
std::optional<OriginLocation> parse_origin_location(std::string_view s) {
  return detail::enum_parse<OriginLocation>(s, kOriginLocationNames);
}

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

std::optional<Date> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    const auto* first = s.data() + pos;
    const auto [ptr, ec] = std::from_chars(first, first + len, v);
    if (ec != std::errc{} || ptr != first + len) return std::nullopt;
    return v;
  };
  const auto y = num(0, 4), m = num(5, 2), d = num(8, 2);
  if (!y || !m || !d) return std::nullopt;
  const Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                  std::chrono::day{static_cast<unsigned>(*d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

const std::string& CrawlRecord::url_at_hop(std::size_t hop) const {
  if (hop == 0 || redirects.empty()) return original_url;
  return redirects.at(std::min(hop, redirects.size()) - 1).target_url;
}

Corpus::Corpus(std::vector<VideoMeta> videos, std::vector<CrawlRecord> crawls)
    : videos_(std::move(videos)), crawls_(std::move(crawls)) {
  for (std::size_t i = 0; i < videos_.size(); ++i) video_index_.emplace(videos_[i].video_id, i);
  for (std::size_t i = 0; i < crawls_.size(); ++i) {
    crawl_index_.emplace(crawls_[i].link_id, i);
    video_crawls_[crawls_[i].video_id].push_back(i);
  }
}

const VideoMeta* Corpus::find_video(std::string_view video_id) const {
  const auto it = video_index_.find(std::string(video_id));
  return it == video_index_.end() ? nullptr : &videos_[it->second];
}

const CrawlRecord* Corpus::find_crawl(std::string_view link_id) const {
  const auto it = crawl_index_.find(std::string(link_id));
  return it == crawl_index_.end() ? nullptr : &crawls_[it->second];
}

std::vector<std::size_t> Corpus::crawls_of(std::string_view video_id) const {
  const auto it = video_crawls_.find(std::string(video_id));
  return it == video_crawls_.end() ? std::vector<std::size_t>{} : it->second;
}

std::string describe(const SchemaViolation& v) {
  std::string out = "line " + std::to_string(v.line);
  if (!v.field_path.empty()) out += " [" + v.field_path + "]";
  return out + ": " + v.message;
}

namespace {

// Collects violations for one input line while decoding it.
class LineChecker {
 public:
  explicit LineChecker(std::size_t line) : line_(line) {}

  void fail(std::string path, std::string message) {
    violations_.push_back({line_, std::move(path), std::move(message)});
  }
  bool ok() const { return violations_.empty(); }
  std::vector<SchemaViolation>& violations() { return violations_; }

  std::string string_field(const Json& obj, const char* key, const std::string& path,
                           bool non_empty = true) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
      fail(path + key, "missing field");
      return {};
    }
    if (!it->is_string()) {
      fail(path + key, "expected string");
      return {};
    }
    auto value = it->get<std::string>();
    if (non_empty && value.empty()) fail(path + key, "must be non-empty");
    return value;
  }

  std::string url_field(const Json& obj, const char* key, const std::string& path) {
    const auto raw = string_field(obj, key, path);
    if (raw.empty()) return raw;
    auto norm = normalize_url(raw);
    if (!norm) {
      fail(path + key, "not an absolute URL: " + raw);
      return raw;
    }
    return *norm;
  }

  template <typename E, typename Parse>
  E enum_field(const Json& obj, const char* key, const std::string& path, Parse parse,
               std::optional<E> fallback = std::nullopt) {
    const auto it = obj.find(key);
    if (it == obj.end() && fallback) return *fallback;
    const auto text = string_field(obj, key, path);
    if (auto v = parse(text)) return *v;
    if (!text.empty()) fail(path + key, "unknown value: " + text);
    return E{};
  }

  int hop_field(const Json& obj, const std::string& path) {
    const auto it = obj.find("hop");
    if (it == obj.end()) return -1;
    if (!it->is_number_integer() || it->get<long long>() < 0) {
      fail(path + "hop", "expected non-negative integer");
      return -1;
    }
    return static_cast<int>(it->get<long long>());
  }

  const Json* array_field(const Json& obj, const char* key, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) return nullptr;
    if (!it->is_array()) {
      fail(path + key, "expected array");
      return nullptr;
    }
    return &*it;
  }

 private:
  std::size_t line_;
  std::vector<SchemaViolation> violations_;
};

VideoMeta decode_video(const Json& j, LineChecker& check, const IngestOptions& options) {
  VideoMeta v;
  v.video_id = check.string_field(j, "video_id", "");
  v.channel_id = check.string_field(j, "channel_id", "");
  const auto date_text = check.string_field(j, "upload_date", "");
  if (!date_text.empty()) {
    if (auto d = parse_date(date_text)) {
      v.upload_date = *d;
      if (*d < options.min_upload_date || *d > options.max_upload_date) {
        check.fail("upload_date", "outside accepted range: " + date_text);
      }
    } else {
      check.fail("upload_date", "expected YYYY-MM-DD: " + date_text);
    }
  }
  v.category = check.enum_field<Category>(j, "category", "", parse_category);
  const auto subs = j.find("subscriber_count");
  if (subs == j.end()) {
    check.fail("subscriber_count", "missing field");
  } else if (subs->is_number_unsigned()) {
    v.subscriber_count = subs->get<std::uint64_t>();
  } else if (subs->is_number_integer()) {
    check.fail("subscriber_count", "must be >= 0");
  } else {
    check.fail("subscriber_count", "expected integer");
  }
  v.source_tag = check.enum_field<SourceTag>(j, "source_tag", "", parse_source_tag);
  v.description_text = check.string_field(j, "description_text", "", false);
  v.language_tag = check.string_field(j, "language_tag", "");
  return v;
}

void check_chain(const CrawlRecord& r, LineChecker& check) {
  for (std::size_t i = 0; i < r.redirects.size(); ++i) {
    const auto& ev = r.redirects[i];
    const auto path = "redirects[" + std::to_string(i) + "].";
    if (ev.sequence_index != static_cast<int>(i)) {
      check.fail(path + "sequence_index", "expected " + std::to_string(i));
    }
    const auto& expected_source = i == 0 ? r.original_url : r.redirects[i - 1].target_url;
    if (ev.source_url != expected_source) {
      check.fail(path + "source_url", i == 0 ? "chain does not start at original_url"
                                             : "chain contiguity broken");
    }
  }
  std::unordered_set<std::string> sources;
  for (const auto& ev : r.redirects) sources.insert(ev.source_url);
  if (sources.size() != r.redirects.size()) check.fail("redirects", "redirect loop");

  const auto& expected_landing = r.redirects.empty() ? r.original_url : r.redirects.back().target_url;
  if (!r.landing_url.empty() && r.landing_url != expected_landing) {
    check.fail("landing_url", "landing mismatch");
  }
  const auto max_hop = static_cast<int>(r.redirects.size());
  auto check_hop = [&](int hop, const std::string& path) {
    if (hop > max_hop) check.fail(path + "hop", "beyond end of chain");
  };
  for (std::size_t i = 0; i < r.storage_events.size(); ++i) {
    check_hop(r.storage_events[i].hop, "storage_events[" + std::to_string(i) + "].");
  }
  for (std::size_t i = 0; i < r.dom_hooks.size(); ++i) {
    check_hop(r.dom_hooks[i].hop, "dom_hooks[" + std::to_string(i) + "].");
  }
  for (std::size_t i = 0; i < r.js_calls.size(); ++i) {
    check_hop(r.js_calls[i].hop, "js_calls[" + std::to_string(i) + "].");
  }
}

CrawlRecord decode_crawl(const Json& j, LineChecker& check) {
  CrawlRecord r;
  r.link_id = check.string_field(j, "link_id", "");
  r.video_id = check.string_field(j, "video_id", "");
  r.origin_location = check.enum_field<OriginLocation>(
      j, "origin_location", "", parse_origin_location, OriginLocation::Description);
  r.original_url = check.url_field(j, "original_url", "");
  r.landing_url = check.url_field(j, "landing_url", "");

  if (const auto* arr = check.array_field(j, "redirects", "")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto& e = (*arr)[i];
      const auto path = "redirects[" + std::to_string(i) + "].";
      if (!e.is_object()) {
        check.fail(path.substr(0, path.size() - 1), "expected object");
        continue;
      }
      RedirectEvent ev;
      const auto idx = e.find("sequence_index");
      if (idx == e.end() || !idx->is_number_integer()) {
        check.fail(path + "sequence_index", "expected integer");
      } else {
        ev.sequence_index = static_cast<int>(idx->get<long long>());
      }
      ev.source_url = check.url_field(e, "source_url", path);
      ev.target_url = check.url_field(e, "target_url", path);
      ev.status_class = check.enum_field<NavigationKind>(e, "status_class", path,
                                                         parse_navigation_kind,
                                                         NavigationKind::HttpRedirect);
      if (const auto* qp = check.array_field(e, "query_params", path)) {
        for (std::size_t k = 0; k < qp->size(); ++k) {
          const auto& pair = (*qp)[k];
          if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() ||
              !pair[1].is_string()) {
            check.fail(path + "query_params[" + std::to_string(k) + "]",
                       "expected [key, value] strings");
            continue;
          }
          ev.query_params.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
        }
      }
      r.redirects.push_back(std::move(ev));
    }
  }
  if (const auto* arr = check.array_field(j, "storage_events", "")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto& e = (*arr)[i];
      const auto path = "storage_events[" + std::to_string(i) + "].";
      if (!e.is_object()) {
        check.fail(path.substr(0, path.size() - 1), "expected object");
        continue;
      }
      StorageEvent ev;
      ev.actor_origin = check.string_field(e, "actor_origin", path);
      if (!ev.actor_origin.empty()) {
        if (!is_valid_origin(ev.actor_origin)) {
          check.fail(path + "actor_origin", "not a valid origin: " + ev.actor_origin);
        } else {
          ev.actor_origin = parse_url(ev.actor_origin)->origin();
        }
      }
      ev.storage_key = check.string_field(e, "storage_key", path);
      ev.storage_value = check.string_field(e, "storage_value", path, false);
      ev.action = check.enum_field<StorageAction>(e, "action", path, parse_storage_action);
      ev.hop = check.hop_field(e, path);
      r.storage_events.push_back(std::move(ev));
    }
  }
  if (const auto* arr = check.array_field(j, "dom_hooks", "")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto& e = (*arr)[i];
      const auto path = "dom_hooks[" + std::to_string(i) + "].";
      if (!e.is_object()) {
        check.fail(path.substr(0, path.size() - 1), "expected object");
        continue;
      }
      DomHook hook;
      hook.element_name = check.string_field(e, "element_name", path);
      hook.class_id = check.string_field(e, "class_id", path, false);
      hook.hop = check.hop_field(e, path);
      r.dom_hooks.push_back(std::move(hook));
    }
  }
  if (const auto* arr = check.array_field(j, "js_calls", "")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto& e = (*arr)[i];
      const auto path = "js_calls[" + std::to_string(i) + "]";
      if (e.is_string() && !e.get<std::string>().empty()) {
        r.js_calls.push_back({e.get<std::string>(), -1});
      } else if (e.is_object()) {
        JsCall call;
        call.function_name = check.string_field(e, "name", path + ".");
        call.hop = check.hop_field(e, path + ".");
        r.js_calls.push_back(std::move(call));
      } else {
        check.fail(path, "expected function name");
      }
    }
  }
  if (check.ok()) check_chain(r, check);
  return r;
}

Json encode_video(const VideoMeta& v) {
  Json j;
  j["kind"] = "video";
  j["schema_version"] = kCrawlSchemaVersion;
  j["video_id"] = v.video_id;
  j["channel_id"] = v.channel_id;
  j["upload_date"] = format_date(v.upload_date);
  j["category"] = to_string(v.category);
  j["subscriber_count"] = v.subscriber_count;
  j["source_tag"] = to_string(v.source_tag);
  j["description_text"] = v.description_text;
  j["language_tag"] = v.language_tag;
  return j;
}

Json encode_crawl(const CrawlRecord& r) {
  Json j;
  j["kind"] = "crawl";
  j["schema_version"] = kCrawlSchemaVersion;
  j["link_id"] = r.link_id;
  j["video_id"] = r.video_id;
  j["origin_location"] = to_string(r.origin_location);
  j["original_url"] = r.original_url;
  j["redirects"] = Json::array();
  for (const auto& ev : r.redirects) {
    Json e;
    e["sequence_index"] = ev.sequence_index;
    e["source_url"] = ev.source_url;
    e["target_url"] = ev.target_url;
    e["status_class"] = to_string(ev.status_class);
    e["query_params"] = Json::array();
    for (const auto& [k, val] : ev.query_params) e["query_params"].push_back({k, val});
    j["redirects"].push_back(std::move(e));
  }
  j["storage_events"] = Json::array();
  for (const auto& ev : r.storage_events) {
    Json e;
    e["actor_origin"] = ev.actor_origin;
    e["storage_key"] = ev.storage_key;
    e["storage_value"] = ev.storage_value;
    e["action"] = to_string(ev.action);
    if (ev.hop >= 0) e["hop"] = ev.hop;
    j["storage_events"].push_back(std::move(e));
  }
  j["dom_hooks"] = Json::array();
  for (const auto& h : r.dom_hooks) {
    Json e;
    e["element_name"] = h.element_name;
    e["class_id"] = h.class_id;
    if (h.hop >= 0) e["hop"] = h.hop;
    j["dom_hooks"].push_back(std::move(e));
  }
  j["js_calls"] = Json::array();
  for (const auto& c : r.js_calls) {
    if (c.hop >= 0) {
      j["js_calls"].push_back(Json{{"name", c.function_name}, {"hop", c.hop}});
    } else {
      j["js_calls"].push_back(c.function_name);
    }
  }
  j["landing_url"] = r.landing_url;
  return j;
}

struct PendingCrawl {
  CrawlRecord record;
  std::size_t line;
};

}  // namespace

IngestResult ingest_stream(std::istream& in, const IngestOptions& options) {
  IngestResult result;
  std::vector<VideoMeta> videos;
  std::vector<PendingCrawl> crawls;
  std::unordered_set<std::string> video_ids;
  std::unordered_set<std::string> link_ids;

  auto report = [&](std::vector<SchemaViolation>& vs) {
    if (options.strict && !vs.empty()) throw IngestError(vs.front());
    for (auto& v : vs) result.violations.push_back(std::move(v));
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    LineChecker check(line_no);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      check.fail("", std::string("malformed line: ") + e.what());
      report(check.violations());
      continue;
    }
    if (!j.is_object()) {
      check.fail("", "expected a JSON object");
      report(check.violations());
      continue;
    }
    const auto version = j.find("schema_version");
    if (version == j.end() || !version->is_number_integer() ||
        version->get<long long>() != kCrawlSchemaVersion) {
      check.fail("schema_version", "expected " + std::to_string(kCrawlSchemaVersion));
    }
    const auto kind = check.string_field(j, "kind", "");
    if (kind == "video") {
      auto v = decode_video(j, check, options);
      if (check.ok() && !video_ids.insert(v.video_id).second) {
        check.fail("video_id", "duplicate video_id " + v.video_id);
      }
      if (check.ok()) videos.push_back(std::move(v));
    } else if (kind == "crawl") {
      auto r = decode_crawl(j, check);
      if (check.ok() && !link_ids.insert(r.link_id).second) {
        check.fail("link_id", "duplicate link_id " + r.link_id);
      }
      if (check.ok()) crawls.push_back({std::move(r), line_no});
    } else if (!kind.empty()) {
      check.fail("kind", "unknown record kind: " + kind);
    }
    report(check.violations());
  }
  if (in.bad()) throw IngestError("read error");

  std::vector<CrawlRecord> kept;
  kept.reserve(crawls.size());
  for (auto& pending : crawls) {
    if (!video_ids.count(pending.record.video_id)) {
      std::vector<SchemaViolation> vs{{pending.line, "video_id",
                                       "dangling video_id " + pending.record.video_id}};
      report(vs);
      continue;
    }
    kept.push_back(std::move(pending.record));
  }
  std::stable_sort(result.violations.begin(), result.violations.end(),
                   [](const SchemaViolation& a, const SchemaViolation& b) { return a.line < b.line; });
  result.corpus = Corpus(std::move(videos), std::move(kept));
  return result;
}

IngestResult ingest_corpus(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot read " + path);
  return ingest_stream(in, options);
}

std::string serialize_video(const VideoMeta& v) { return encode_video(v).dump(); }
std::string serialize_crawl(const CrawlRecord& r) { return encode_crawl(r).dump(); }

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& v : corpus.videos()) out << serialize_video(v) << '\n';
  for (const auto& r : corpus.crawls()) out << serialize_crawl(r) << '\n';
}

namespace {

bool url_stop_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isspace(u) || u < 0x20 || c == '<' || c == '>' || c == '"' || c == '`' ||
         c == '{' || c == '}' || c == '|' || c == '\\' || c == '^';
}

bool starts_with_ci(std::string_view text, std::size_t pos, std::string_view prefix) {
  if (text.size() - pos < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) != prefix[i]) return false;
  }
  return true;
}

}  // namespace

std::vector<ExtractedLink> extract_hyperlinks(std::string_view text) {
  std::vector<ExtractedLink> links;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const bool http = starts_with_ci(text, pos, "http://");
    const bool https = !http && starts_with_ci(text, pos, "https://");
    const bool boundary =
        pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
    if (!(http || https) || !boundary) {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < text.size() && !url_stop_char(text[end])) ++end;
    // Trailing punctuation belongs to the sentence; a closing paren stays
    // only when the URL opened one.
    while (end > pos) {
      const char c = text[end - 1];
      if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '\'' ||
          c == ']' || c == '}') {
        --end;
        continue;
      }
      if (c == ')') {
        const auto candidate = text.substr(pos, end - pos);
        if (std::count(candidate.begin(), candidate.end(), '(') <
            std::count(candidate.begin(), candidate.end(), ')')) {
          --end;
          continue;
        }
      }
      break;
    }
    const auto candidate = text.substr(pos, end - pos);
    if (parse_url(candidate)) {
      links.push_back({std::string(candidate), pos});
      pos = end;
    } else {
      pos += http ? 7 : 8;
    }
  }
  return links;
}

}  // namespace affaudit
