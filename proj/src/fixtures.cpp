#include "affaudit/fixtures.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include <json.hpp>

#include "affaudit/detail/enum_names.hpp"
#include "affaudit/embedded_data.hpp"
#include "affaudit/rng.hpp"

namespace affaudit {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::array<std::string_view, kScriptRowCount> kRowNames = {
    "ClearExplicitGrouped", "ClearMixed",   "AmbiguousExplicitGrouped", "AmbiguousMixed",
    "AbsentExplicitGrouped", "AbsentMixed", "AbsentAbsent"};

constexpr std::uint64_t kStreamAffiliateSet = 40;
constexpr std::uint64_t kStreamVideo = 41;
constexpr std::uint64_t kStreamChannel = 42;
constexpr std::uint64_t kStreamRows = 43;
constexpr std::uint64_t kStreamContent = 44;

constexpr double kWeightTolerance = 1e-6;

// ---------------------------------------------------------------- vocab --

constexpr std::array<std::string_view, 24> kHandleA = {
    "urban", "pixel", "quiet", "rapid", "lazy",  "cosmic", "rusty", "sunny",
    "tiny",  "mighty", "clever", "happy", "wild", "north",  "retro", "silver",
    "copper", "little", "golden", "frosty", "noisy", "brave", "lucky", "steady"};
constexpr std::array<std::string_view, 24> kHandleB = {
    "fox",    "garage", "kitchen", "maker", "gamer", "hiker",  "lens",  "beats",
    "tinker", "crafts", "reviews", "bench", "trail", "studio", "gadget", "chef",
    "rider",  "nomad",  "coder",   "build", "paws",  "garden", "fitness", "tech"};

constexpr std::array<std::string_view, 30> kProducts = {
    "Lumacam X2 camera",       "TrailPro 40L backpack",   "BrewMaster kettle",
    "Nimbus mechanical keyboard", "Orbit wireless mouse",  "Halo ring light",
    "StudioOne microphone",    "Aero tripod",             "Summit hiking boots",
    "Zen yoga mat",            "Pulse fitness tracker",   "Forge cast iron pan",
    "Breeze desk fan",         "Cinder camping stove",    "Echo bluetooth speaker",
    "Drift action camera",     "Pixel drawing tablet",    "Spark soldering iron",
    "Glide electric scooter",  "Nova gaming headset",     "Atlas standing desk",
    "Vault external SSD",      "Harbor dog harness",      "Bloom skincare set",
    "Crest chef knife",        "Ridge rain jacket",       "Flux USB-C hub",
    "Tempo running shoes",     "Quill fountain pen",      "Orbit webcam"};

constexpr std::array<std::string_view, 8> kIntros = {
    "In this video I take a closer look at the {p}.",
    "Today we compare three budget options, including the {p}.",
    "Here is my honest review of the {p} after a month of use.",
    "Welcome back to the channel!",
    "A quick build video with the {p}.",
    "We tested the {p} so you do not have to.",
    "My full setup tour, finally.",
    "Everything I packed for a week on the road."};

constexpr std::array<std::string_view, 4> kOutros = {
    "Thanks for watching and see you next week!", "Subscribe for more videos every week!",
    "Music: Lakeside by Northwind Records.", "Timestamps are in the pinned comment."};

// Sentences that look disclosure-adjacent but are not disclosures.
constexpr std::array<std::string_view, 6> kDistractors = {
    "Use promo code {c} for 15% off your first order.",
    "This video is not sponsored, I bought everything myself.",
    "Want to partner with us? Join the {b} affiliate program.",
    "Sponsorship inquiries: see the about tab.",
    "Commissions are open for custom artwork.",
    "Business email is on the channel page."};
constexpr std::array<double, 6> kDistractorRates = {0.15, 0.10, 0.05, 0.08, 0.03, 0.10};

constexpr std::array<std::string_view, 4> kClearHeaders = {
    "I earn a small commission from the links below at no extra cost to you:",
    "If you buy something through these links, I get a small commission:",
    "The channel receives a commission on purchases made through these links:",
    "We earn a commission when you buy through the links below:"};
constexpr std::string_view kAmazonHeader = "As an Amazon Associate I earn from qualifying purchases.";
constexpr std::array<std::string_view, 3> kAmbiguousHeaders = {
    "Support the channel by shopping through these links:",
    "Shopping through these links helps support the channel:",
    "Want to help the channel? Use the links below:"};
constexpr std::array<std::string_view, 3> kAbsentHeaders = {
    "Affiliate links:", "Links below are affiliate links.", "#ad"};

constexpr std::array<std::string_view, 2> kClearInline = {
    "(I earn a small commission if you buy through this link)",
    "(I get a commission on purchases through this link)"};
constexpr std::array<std::string_view, 2> kAmbiguousInline = {
    "(buying through this link supports the channel)",
    "(this link helps support the channel)"};
constexpr std::array<std::string_view, 2> kAbsentInline = {"(affiliate link)", "(affiliate)"};

constexpr std::array<std::string_view, 3> kClearMixed = {
    "Some of the links in this description are affiliate links, and I earn a small commission "
    "if you buy something.",
    "Some links below are affiliate links, which means I get a small commission at no extra "
    "cost to you.",
    "Links in the description may be affiliate links; the channel receives a commission on "
    "qualifying purchases."};
constexpr std::array<std::string_view, 2> kAmbiguousMixed = {
    "Using the links in the description helps support the channel!",
    "Some of the links below help support the channel."};
constexpr std::array<std::string_view, 2> kAbsentMixed = {
    "Some of the links in the description are affiliate links.",
    "#ad Some of these links are affiliate links."};

constexpr std::array<std::string_view, 3> kPlainHeaders = {"Gear I use:", "Products mentioned:",
                                                           "My setup:"};
constexpr std::array<std::string_view, 3> kFollowHeaders = {"Follow me:", "Find me elsewhere:",
                                                            "Links:"};

constexpr std::array<std::string_view, 4> kOtherLanguages = {"es", "de", "pt-BR", "fr"};

constexpr std::array<std::string_view, 6> kDomHookPool = {
    "div.product-grid", "button.buy-now", "a.nav-link", "img.hero", "form.newsletter",
    "div.profile-header"};
constexpr std::array<std::string_view, 5> kJsPool = {
    "fetch", "localStorage.setItem", "navigator.sendBeacon", "XMLHttpRequest.open", "setTimeout"};

// ------------------------------------------------------------- helpers --

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}

  std::uint64_t below(std::uint64_t n) { return uniform_below(rng_, n); }
  bool chance(double p) { return uniform_unit(rng_) < p; }
  std::size_t range(std::size_t lo, std::size_t hi) {  // inclusive
    return lo + static_cast<std::size_t>(below(hi - lo + 1));
  }
  template <typename C>
  const auto& pick(const C& c) {
    return c[static_cast<std::size_t>(below(c.size()))];
  }
  template <std::size_t N>
  std::size_t weighted(const std::array<double, N>& w) {
    return weighted(std::span<const double>(w));
  }
  std::size_t weighted(std::span<const double> w) {
    const double u = uniform_unit(rng_);
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      acc += w[i];
      if (u < acc) return i;
    }
    // Rounding left a sliver above the last cumulative value.
    for (std::size_t i = w.size(); i-- > 0;) {
      if (w[i] > 0.0) return i;
    }
    return 0;
  }
  std::string chars(std::size_t n, std::string_view alphabet) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += alphabet[static_cast<std::size_t>(below(alphabet.size()))];
    return s;
  }
  std::string hex(std::size_t n) { return chars(n, "0123456789abcdef"); }
  std::string alnum(std::size_t n) {
    return chars(n, "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789");
  }
  std::string digits(std::size_t n) { return chars(n, "0123456789"); }
  SplitMix64& engine() { return rng_; }

 private:
  SplitMix64 rng_;
};

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

std::string slugify(std::string_view s) {
  std::string out;
  for (const char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!out.empty() && out.back() != '-') {
      out += '-';
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

// FNV-1a, so derived identifiers do not depend on the standard library.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string normalized(const std::string& url) {
  auto n = normalize_url(url);
  if (!n) throw FixtureError("generator built an invalid URL: " + url);
  return *n;
}

std::string origin_of(const std::string& url) { return parse_url(url)->origin(); }

// ------------------------------------------------------------- traces --

struct Trace {
  std::vector<std::string> hops;
  std::vector<NavigationKind> nav;  // nav[i] leads from hops[i] to hops[i + 1]
  std::vector<StorageEvent> storage;
  std::vector<DomHook> dom;
  std::vector<JsCall> js;
  std::string kind;

  void hop(std::string url, NavigationKind k = NavigationKind::HttpRedirect) {
    if (!hops.empty()) nav.push_back(k);
    hops.push_back(normalized(url));
  }
  int last() const { return static_cast<int>(hops.size()) - 1; }
  void write(int at, std::string key, std::string value) {
    storage.push_back({origin_of(hops[static_cast<std::size_t>(at)]), std::move(key),
                       std::move(value), StorageAction::Write, at});
  }
  void read(int at, std::string key, std::string value) {
    storage.push_back({origin_of(hops[static_cast<std::size_t>(at)]), std::move(key),
                       std::move(value), StorageAction::Read, at});
  }
};

void page_noise(Trace& t, Draw& d, int at) {
  const auto n_dom = d.range(0, 3);
  for (std::size_t i = 0; i < n_dom; ++i) {
    const std::string_view h = d.pick(kDomHookPool);
    const auto dot = h.find('.');
    t.dom.push_back({std::string(h.substr(0, dot)), std::string(h.substr(dot + 1)), at});
  }
  const auto n_js = d.range(0, 2);
  for (std::size_t i = 0; i < n_js; ++i) t.js.push_back({std::string(d.pick(kJsPool)), at});
}

CrawlRecord to_record(const Trace& t, std::string link_id, const std::string& video_id,
                      OriginLocation where) {
  CrawlRecord r;
  r.link_id = std::move(link_id);
  r.video_id = video_id;
  r.origin_location = where;
  r.original_url = t.hops.front();
  for (std::size_t i = 0; i + 1 < t.hops.size(); ++i) {
    RedirectEvent e;
    e.sequence_index = static_cast<int>(i);
    e.source_url = t.hops[i];
    e.target_url = t.hops[i + 1];
    e.status_class = t.nav[i];
    e.query_params = parse_url(t.hops[i + 1])->query;
    r.redirects.push_back(std::move(e));
  }
  r.storage_events = t.storage;
  r.dom_hooks = t.dom;
  r.js_calls = t.js;
  r.landing_url = t.hops.back();
  return r;
}

struct Channel {
  std::string id;
  std::string handle;
  std::uint64_t subscribers = 0;
};

Trace amazon_link(Draw& d, const Channel& ch, std::string_view product) {
  Trace t;
  const std::string asin = "B0" + d.chars(8, "ABCDEFGHJKLMNPQRSTUVWXYZ0123456789");
  const std::string tag = ch.handle + "-20";
  const std::string slug = slugify(product);
  const auto variant = d.weighted(std::array<double, 3>{0.45, 0.40, 0.15});
  if (variant == 0) {
    t.kind = "amazon_tag";
    t.hop("https://amazon.com/dp/" + asin + "?tag=" + tag);
    t.write(0, "assoc_tag", tag);
    t.hop("https://www.amazon.com/dp/" + asin + "?tag=" + tag + "&linkCode=ll1&ref_=as_li_ss_tl");
  } else if (variant == 1) {
    t.kind = "amazon_short";
    t.hop("https://amzn.to/" + d.alnum(7));
    t.hop("https://www.amazon.com/dp/" + asin + "?tag=" + tag + "&linkCode=sl1");
    t.write(1, "assoc_tag", tag);
    t.hop("https://www.amazon.com/" + slug + "/dp/" + asin + "?tag=" + tag +
          "&ref_=as_li_ss_tl&th=1");
  } else {
    t.kind = "amazon_storefront";
    t.hop("https://amazon.com/shop/" + ch.handle);
    t.write(0, "storefront", ch.handle);
    t.hop("https://www.amazon.com/shop/" + ch.handle + "?ref_=cm_sw_r_" + ch.handle + "_sf");
  }
  t.write(t.last(), "session-id", d.digits(3) + "-" + d.digits(7) + "-" + d.digits(7));
  page_noise(t, d, t.last());
  return t;
}

Trace network_link(Draw& d, const Channel& ch, const Partner& p, std::string_view product,
                   const std::string& video_id) {
  Trace t;
  t.kind = "network_" + p.id;
  const std::string click = d.hex(12);
  const std::string pub = "p" + std::to_string(fnv1a(ch.handle + "/" + p.id) % 900000 + 100000);
  const bool shortened = d.chance(0.3);
  if (shortened) {
    t.kind += "_short";
    t.hop(d.chance(0.5) ? "https://geni.us/" + d.alnum(6) : "https://bit.ly/" + d.alnum(7));
  }
  const std::string offer = d.digits(d.range(4, 6));
  if (p.id_key == "affiliate_id") {
    t.hop("https://" + p.trackers.front() + "/click?affiliate_id=" + pub + "&offer=" + offer);
  } else {
    t.hop("https://" + p.trackers.front() + "/c/" + pub + "/" + offer + "?subid=" + video_id);
  }
  const int tracker_hop = t.last();
  t.write(tracker_hop, p.id_key, click);
  if (d.chance(0.5)) t.write(tracker_hop, "pub", pub);
  t.js.push_back({"document.cookie", tracker_hop});
  const bool js_nav = d.chance(0.3);
  if (p.trackers.size() > 1 && d.chance(0.6)) {
    t.hop("https://" + p.trackers[1] + "/r?cid=" + click,
          js_nav ? NavigationKind::JsNavigation : NavigationKind::HttpRedirect);
  }
  const std::string& merchant = d.pick(p.merchants);
  std::string landing = "https://" + merchant + "/products/" + slugify(product) + "?" + p.id_key +
                        "=" + click + "&utm_source=" + p.id + "&utm_medium=affiliate";
  if (d.chance(0.3)) landing += "&variant=" + d.digits(6);
  t.hop(landing, js_nav ? NavigationKind::JsNavigation : NavigationKind::HttpRedirect);
  if (js_nav) t.js.push_back({"window.location.replace", tracker_hop});
  t.write(t.last(), "session", d.hex(16));
  if (d.chance(0.5)) t.read(t.last(), p.id_key, click);
  page_noise(t, d, t.last());
  return t;
}

std::string social_url(Draw& d, const Channel& ch, std::string& label) {
  switch (d.below(6)) {
    case 0: label = "Instagram"; return "https://www.instagram.com/" + ch.handle + "/";
    case 1: label = "Twitter"; return "https://twitter.com/" + ch.handle;
    case 2: label = "TikTok"; return "https://www.tiktok.com/@" + ch.handle;
    case 3: label = "Facebook"; return "https://www.facebook.com/" + ch.handle;
    case 4: label = "Second channel"; return "https://www.youtube.com/@" + ch.handle + "clips";
    default: label = "Snapchat"; return "https://www.snapchat.com/add/" + ch.handle;
  }
}

std::string site_url(Draw& d, const Channel& ch, std::string& label) {
  switch (d.below(5)) {
    case 0: label = "Patreon"; return "https://www.patreon.com/" + ch.handle;
    case 1: label = "Discord"; return "https://discord.com/invite/" + d.alnum(8);
    case 2: label = "Podcast"; return "https://open.spotify.com/show/" + d.alnum(22);
    case 3:
      label = "Blog";
      return "https://" + ch.handle + ".blog.example/posts/" + d.digits(4) + "?utm_source=youtube";
    default: label = "Twitch"; return "https://www.twitch.tv/" + ch.handle;
  }
}

Trace non_affiliate_link(Draw& d, const Channel& ch, double unresolvable_rate, std::string& label) {
  Trace t;
  if (d.chance(unresolvable_rate)) {
    t.kind = "dead_shortener";
    label = "More";
    t.hop("https://bit.ly/" + d.alnum(7));
    return t;
  }
  const auto kind = d.weighted(std::array<double, 4>{0.45, 0.20, 0.20, 0.15});
  if (kind == 0) {
    t.kind = "social";
    const std::string url = social_url(d, ch, label);
    if (d.chance(0.4)) {
      // Old-style link that the platform upgrades or renames.
      if (url.starts_with("https://twitter.com/")) {
        t.hop(url);
        t.hop("https://x.com/" + ch.handle);
      } else {
        t.hop("http://" + url.substr(8));
        t.hop(url);
      }
    } else {
      t.hop(url);
    }
    t.write(t.last(), d.chance(0.5) ? "csrftoken" : "mid", d.alnum(24));
  } else if (kind == 1) {
    t.kind = "own_store";
    label = "Merch";
    const std::string store =
        "https://merch." + ch.handle + ".example/collections/all?utm_source=youtube&utm_medium=description";
    if (d.chance(0.4)) {
      t.hop("https://" + ch.handle + ".example/shop");
      t.hop(store);
    } else {
      t.hop(store);
    }
    t.write(t.last(), "cart", d.hex(20));
    t.write(t.last(), "utm_src", "youtube");
  } else if (kind == 2) {
    t.kind = "shortened";
    const std::string target = site_url(d, ch, label);
    if (d.chance(0.1)) t.hop("https://t.co/" + d.alnum(10));
    t.hop("https://bit.ly/" + d.alnum(7));
    t.hop(target);
    t.write(t.last(), "visitor", d.hex(16));
  } else {
    t.kind = "site";
    t.hop(site_url(d, ch, label));
    if (d.chance(0.5)) t.write(t.last(), "visitor", d.hex(16));
  }
  page_noise(t, d, t.last());
  return t;
}

// ---------------------------------------------- generator spec parsing --

RowWeights parse_row_weights(const json& j, const char* field) {
  if (!j.is_array() || j.size() != kScriptRowCount) {
    throw FixtureError(std::string(field) + ": expected an array of 7 weights");
  }
  RowWeights w{};
  for (std::size_t i = 0; i < kScriptRowCount; ++i) w[i] = j[i].get<double>();
  return w;
}

template <typename E, std::size_t N>
std::array<double, N> parse_named_weights(const json& j, const char* field,
                                          std::optional<E> (*parse)(std::string_view)) {
  if (!j.is_object()) throw FixtureError(std::string(field) + ": expected an object");
  std::array<double, N> w{};
  for (const auto& [k, v] : j.items()) {
    const auto e = parse(k);
    if (!e) throw FixtureError(std::string(field) + ": unknown key '" + k + "'");
    w[static_cast<std::size_t>(*e)] = v.template get<double>();
  }
  return w;
}

void check_rate(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw FixtureError(std::string(name) + " must lie in [0, 1]");
  }
}

void check_distribution(std::span<const double> w, const std::string& name) {
  double sum = 0.0;
  for (const double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw FixtureError("infeasible distribution: " + name);
    sum += x;
  }
  if (std::fabs(sum - 1.0) > kWeightTolerance) {
    throw FixtureError("infeasible distribution: " + name + " sums to " + std::to_string(sum));
  }
}

void apply_overrides(GeneratorSpec& s, const json& j) {
  if (!j.is_object()) throw FixtureError("generator spec must be a JSON object");
  static const std::set<std::string> known = {
      "seed", "n_videos", "channels", "affiliate_video_rate", "english_rate", "pre2018_rate",
      "shelf_rate", "unresolvable_rate", "row_weights", "row_weights_by_source", "row_weights_guidance",
      "category_weights", "tier_weights", "source_weights", "partners"};
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw FixtureError("unknown generator field '" + k + "'");
  }
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("n_videos")) s.n_videos = j["n_videos"].get<std::size_t>();
  if (j.contains("channels")) s.channels = j["channels"].get<std::size_t>();
  if (j.contains("affiliate_video_rate")) s.affiliate_video_rate = j["affiliate_video_rate"].get<double>();
  if (j.contains("english_rate")) s.english_rate = j["english_rate"].get<double>();
  if (j.contains("pre2018_rate")) s.pre2018_rate = j["pre2018_rate"].get<double>();
  if (j.contains("shelf_rate")) s.shelf_rate = j["shelf_rate"].get<double>();
  if (j.contains("unresolvable_rate")) s.unresolvable_rate = j["unresolvable_rate"].get<double>();
  if (j.contains("row_weights")) s.row_weights = parse_row_weights(j["row_weights"], "row_weights");
  if (j.contains("row_weights_by_source")) {
    s.row_weights_by_source.clear();
    for (const auto& [k, v] : j["row_weights_by_source"].items()) {
      const auto src = parse_source_tag(k);
      if (!src) throw FixtureError("row_weights_by_source: unknown source '" + k + "'");
      s.row_weights_by_source[*src] = parse_row_weights(v, "row_weights_by_source");
    }
  }
  if (j.contains("row_weights_guidance")) {
    if (j["row_weights_guidance"].is_null()) {
      s.row_weights_guidance.reset();
    } else {
      s.row_weights_guidance = parse_row_weights(j["row_weights_guidance"], "row_weights_guidance");
    }
  }
  if (j.contains("category_weights")) {
    s.category_weights = parse_named_weights<Category, kCategoryCount>(
        j["category_weights"], "category_weights", parse_category);
  }
  if (j.contains("tier_weights")) {
    s.tier_weights = parse_named_weights<ChannelTier, 3>(j["tier_weights"], "tier_weights",
                                                         parse_channel_tier);
  }
  if (j.contains("source_weights")) {
    s.source_weights = parse_named_weights<SourceTag, 4>(j["source_weights"], "source_weights",
                                                         parse_source_tag);
  }
  if (j.contains("partners")) s.partners = parse_partners(j["partners"].dump());
}

}  // namespace

// ------------------------------------------------------------ partners --

std::vector<Partner> parse_partners(std::string_view text) {
  std::vector<Partner> out;
  try {
    const auto j = json::parse(text);
    const auto& arr = j.is_array() ? j : j.at("partners");
    std::set<std::string> ids;
    for (const auto& e : arr) {
      Partner p;
      p.id = e.at("id").get<std::string>();
      p.name = e.value("name", p.id);
      p.style = e.at("style").get<std::string>();
      p.trackers = e.at("trackers").get<std::vector<std::string>>();
      p.merchants = e.at("merchants").get<std::vector<std::string>>();
      p.id_key = e.at("id_key").get<std::string>();
      p.guidance = e.at("guidance").get<bool>();
      p.weight = e.at("weight").get<double>();
      if (p.style != "amazon" && p.style != "network") {
        throw FixtureError("partner '" + p.id + "': unknown style '" + p.style + "'");
      }
      if (p.trackers.empty() || p.merchants.empty()) {
        throw FixtureError("partner '" + p.id + "': needs trackers and merchants");
      }
      if (!ids.insert(p.id).second) throw FixtureError("duplicate partner '" + p.id + "'");
      out.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw FixtureError(std::string("bad partner list: ") + e.what());
  }
  return out;
}

const std::vector<Partner>& default_partners() {
  static const std::vector<Partner> partners = parse_partners(embedded::file("partners.json"));
  return partners;
}

const Partner* partner_for_host(const std::vector<Partner>& partners, std::string_view host) {
  const auto bare = [](std::string_view h) {
    return h.starts_with("www.") ? h.substr(4) : h;
  };
  const auto target = bare(host);
  for (const auto& p : partners) {
    for (const auto* list : {&p.trackers, &p.merchants}) {
      for (const auto& h : *list) {
        if (bare(h) == target) return &p;
      }
    }
  }
  return nullptr;
}

// ---------------------------------------------------------------- rows --

std::string_view to_string(ScriptRow r) { return detail::enum_name(r, kRowNames); }
std::optional<ScriptRow> parse_script_row(std::string_view s) {
  return detail::enum_parse<ScriptRow>(s, kRowNames);
}

std::array<std::size_t, kScriptRowCount> allocate_rows(const RowWeights& weights, std::size_t n) {
  check_distribution(weights, "row weights");
  std::array<std::size_t, kScriptRowCount> counts{};
  std::array<double, kScriptRowCount> frac{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < kScriptRowCount; ++i) {
    const double exact = weights[i] * static_cast<double>(n);
    // Guard against 0.1220 * 10000 landing at 1219.9999999.
    const double fl = std::floor(exact + 1e-9);
    counts[i] = static_cast<std::size_t>(fl);
    frac[i] = std::max(0.0, exact - fl);
    assigned += counts[i];
  }
  std::array<std::size_t, kScriptRowCount> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % kScriptRowCount, ++assigned) {
    ++counts[order[k]];
  }
  return counts;
}

// ------------------------------------------------------ generator spec --

void validate_spec(const GeneratorSpec& s) {
  check_rate(s.affiliate_video_rate, "affiliate_video_rate");
  check_rate(s.english_rate, "english_rate");
  check_rate(s.pre2018_rate, "pre2018_rate");
  check_rate(s.shelf_rate, "shelf_rate");
  check_rate(s.unresolvable_rate, "unresolvable_rate");
  check_distribution(s.row_weights, "row_weights");
  for (const auto& [src, w] : s.row_weights_by_source) {
    check_distribution(w, "row_weights_by_source." + std::string(to_string(src)));
  }
  if (s.row_weights_guidance) check_distribution(*s.row_weights_guidance, "row_weights_guidance");
  check_distribution(s.category_weights, "category_weights");
  check_distribution(s.tier_weights, "tier_weights");
  check_distribution(s.source_weights, "source_weights");
  if (s.partners.empty()) throw FixtureError("generator needs at least one partner");
  std::vector<double> pw;
  for (const auto& p : s.partners) pw.push_back(p.weight);
  check_distribution(pw, "partner weights");
}

GeneratorSpec default_generator_spec() {
  GeneratorSpec s;
  s.partners = default_partners();
  try {
    apply_overrides(s, json::parse(embedded::file("generator_defaults.json")));
  } catch (const json::exception& e) {
    throw FixtureError(std::string("bad bundled generator defaults: ") + e.what());
  }
  validate_spec(s);
  return s;
}

GeneratorSpec parse_generator_spec(std::string_view text) {
  GeneratorSpec s = default_generator_spec();
  try {
    apply_overrides(s, json::parse(text));
  } catch (const json::exception& e) {
    throw FixtureError(std::string("bad generator spec: ") + e.what());
  }
  validate_spec(s);
  return s;
}

GeneratorSpec load_generator_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FixtureError("cannot read " + path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_generator_spec(text);
}

// ----------------------------------------------------------- generator --

namespace {

struct Planned {
  std::size_t channel = 0;
  Category category{};
  SourceTag source{};
  Date date{};
  std::string language;
  std::string video_id;
  bool affiliate = false;
  const Partner* partner = nullptr;
  std::optional<ScriptRow> row;
};

Date random_date(Draw& d, bool pre2018) {
  using namespace std::chrono;
  const sys_days lo = pre2018 ? sys_days{year{2015} / January / 1} : sys_days{year{2018} / January / 1};
  const sys_days hi = pre2018 ? sys_days{year{2017} / December / 31} : sys_days{year{2024} / December / 31};
  const auto span = static_cast<std::uint64_t>((hi - lo).count()) + 1;
  return year_month_day{lo + days{static_cast<int>(d.below(span))}};
}

std::uint64_t random_subscribers(Draw& d, ChannelTier tier) {
  // Log-uniform inside the tier's band.
  const auto [lo, hi] = [&]() -> std::pair<double, double> {
    switch (tier) {
      case ChannelTier::T1: return {10.0, 99'999.0};
      case ChannelTier::T2: return {100'000.0, 999'999.0};
      default: return {1'000'000.0, 50'000'000.0};
    }
  }();
  const double u = uniform_unit(d.engine());
  const double v = std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
  return std::clamp(static_cast<std::uint64_t>(v), static_cast<std::uint64_t>(lo),
                    static_cast<std::uint64_t>(hi));
}

const RowWeights& weights_for(const GeneratorSpec& s, const Planned& v, std::string& group) {
  if (const auto it = s.row_weights_by_source.find(v.source); it != s.row_weights_by_source.end()) {
    group = "source:" + std::string(to_string(v.source));
    return it->second;
  }
  if (s.row_weights_guidance && v.partner && v.partner->guidance) {
    group = "guidance";
    return *s.row_weights_guidance;
  }
  group = "default";
  return s.row_weights;
}

struct LinkLine {
  std::string text;
  bool affiliate = false;
};

}  // namespace

GeneratedCorpus generate_corpus(const GeneratorSpec& spec) {
  validate_spec(spec);
  GeneratedCorpus out;
  if (spec.n_videos == 0) return out;

  // Channels.
  const std::size_t n_channels = spec.channels ? spec.channels : std::max<std::size_t>(1, spec.n_videos / 3);
  std::vector<Channel> channels;
  std::set<std::string> handles;
  for (std::size_t c = 0; c < n_channels; ++c) {
    Draw d(derive_seed(spec.seed, kStreamChannel, c));
    Channel ch;
    ch.id = "UC" + d.alnum(22);
    do {
      ch.handle = std::string(d.pick(kHandleA)) + std::string(d.pick(kHandleB)) + d.digits(2);
    } while (!handles.insert(ch.handle).second);
    ch.subscribers = random_subscribers(d, static_cast<ChannelTier>(d.weighted(spec.tier_weights)));
    channels.push_back(std::move(ch));
  }

  // Which videos are affiliate videos: an exact count, positions shuffled.
  const auto n_aff = static_cast<std::size_t>(
      std::llround(spec.affiliate_video_rate * static_cast<double>(spec.n_videos)));
  std::vector<std::size_t> order(spec.n_videos);
  std::iota(order.begin(), order.end(), std::size_t{0});
  {
    SplitMix64 rng(derive_seed(spec.seed, kStreamAffiliateSet, 0));
    shuffle(std::span<std::size_t>(order), rng);
  }
  std::vector<bool> is_aff(spec.n_videos, false);
  for (std::size_t i = 0; i < n_aff; ++i) is_aff[order[i]] = true;

  std::vector<double> partner_w;
  for (const auto& p : spec.partners) partner_w.push_back(p.weight);

  std::vector<Planned> plan(spec.n_videos);
  std::set<std::string> video_ids;
  for (std::size_t v = 0; v < spec.n_videos; ++v) {
    Draw d(derive_seed(spec.seed, kStreamVideo, v));
    auto& p = plan[v];
    p.channel = static_cast<std::size_t>(d.below(n_channels));
    p.category = static_cast<Category>(d.weighted(spec.category_weights));
    p.source = static_cast<SourceTag>(d.weighted(spec.source_weights));
    p.date = random_date(d, d.chance(spec.pre2018_rate));
    p.language = d.chance(spec.english_rate) ? "en" : std::string(d.pick(kOtherLanguages));
    do {
      p.video_id = d.chars(11, "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_-");
    } while (!video_ids.insert(p.video_id).second);
    p.affiliate = is_aff[v];
    if (p.affiliate) p.partner = &spec.partners[d.weighted(partner_w)];
  }

  // Script rows: exact largest-remainder counts within each weight group.
  std::map<std::string, std::pair<const RowWeights*, std::vector<std::size_t>>> groups;
  for (std::size_t v = 0; v < spec.n_videos; ++v) {
    if (!plan[v].affiliate) continue;
    std::string g;
    const auto& w = weights_for(spec, plan[v], g);
    auto& entry = groups[g];
    entry.first = &w;
    entry.second.push_back(v);
  }
  std::uint64_t ordinal = 0;
  for (auto& [name, entry] : groups) {
    const auto counts = allocate_rows(*entry.first, entry.second.size());
    std::vector<ScriptRow> rows;
    for (std::size_t r = 0; r < kScriptRowCount; ++r) {
      rows.insert(rows.end(), counts[r], static_cast<ScriptRow>(r));
    }
    SplitMix64 rng(derive_seed(spec.seed, kStreamRows, ordinal++));
    shuffle(std::span<ScriptRow>(rows), rng);
    for (std::size_t i = 0; i < rows.size(); ++i) plan[entry.second[i]].row = rows[i];
  }

  // Content.
  for (std::size_t v = 0; v < spec.n_videos; ++v) {
    const auto& p = plan[v];
    const auto& ch = channels[p.channel];
    Draw d(derive_seed(spec.seed, kStreamContent, v));

    VideoMeta meta;
    meta.video_id = p.video_id;
    meta.channel_id = ch.id;
    meta.upload_date = p.date;
    meta.category = p.category;
    meta.subscriber_count = ch.subscribers;
    meta.source_tag = p.source;
    meta.language_tag = p.language;

    TruthVideo tv;
    tv.english = p.language == "en";
    tv.row = p.row;
    auto& rec = tv.record;
    rec.video_id = p.video_id;
    rec.channel_id = ch.id;
    rec.category = p.category;
    rec.tier = tier_of(ch.subscribers);
    rec.source = p.source;
    rec.period = period_of(p.date);

    std::size_t link_no = 0;
    std::set<std::string> all_urls, aff_urls;
    const auto add_crawl = [&](const Trace& t, bool affiliate, OriginLocation where) {
      const std::string link_id = p.video_id + "-l" + std::to_string(link_no++);
      out.crawls.push_back(to_record(t, link_id, p.video_id, where));
      out.links.push_back({link_id, p.video_id, affiliate, t.kind});
      all_urls.insert(t.hops.front());
      if (affiliate) aff_urls.insert(t.hops.front());
      return t.hops.front();
    };

    const std::string product(d.pick(kProducts));
    std::vector<std::string> lines;
    lines.push_back(replace_all(std::string(d.pick(kIntros)), "{p}", product));
    for (std::size_t i = 0; i < kDistractors.size(); ++i) {
      if (!d.chance(kDistractorRates[i])) continue;
      std::string s(kDistractors[i]);
      s = replace_all(s, "{c}", "SAVE" + d.digits(2));
      const std::string_view brand = d.pick(kProducts);
      s = replace_all(s, "{b}", brand.substr(0, brand.find(' ')));
      lines.push_back(s);
    }
    lines.emplace_back();

    // Affiliate links and their script.
    std::vector<LinkLine> aff_lines;
    const bool mixed = p.row == ScriptRow::ClearMixed || p.row == ScriptRow::AmbiguousMixed ||
                       p.row == ScriptRow::AbsentMixed;
    if (p.affiliate) {
      rec.partner = p.partner->id;
      rec.has_guidance = p.partner->guidance;
      tv.shelf_only = p.source == SourceTag::Shopping && p.row == ScriptRow::ClearExplicitGrouped &&
                      d.chance(spec.shelf_rate);
      const auto make = [&]() {
        const std::string prod(d.pick(kProducts));
        Trace t = p.partner->style == "amazon" ? amazon_link(d, ch, prod)
                                               : network_link(d, ch, *p.partner, prod, p.video_id);
        return std::pair{t, prod};
      };
      if (tv.shelf_only) {
        const auto n_shelf = d.range(1, 3);
        for (std::size_t i = 0; i < n_shelf; ++i) add_crawl(make().first, true, OriginLocation::ShoppingShelf);
      }
      const auto n_desc = tv.shelf_only ? d.range(0, 1) : d.range(1, 4);
      for (std::size_t i = 0; i < n_desc; ++i) {
        auto [t, prod] = make();
        const auto url = add_crawl(t, true, OriginLocation::Description);
        aff_lines.push_back({"- " + prod + ": " + url, true});
      }
    }

    // Non-affiliate links.
    std::vector<LinkLine> other_lines;
    auto n_other = d.range(0, p.affiliate ? 3 : 4);
    if (mixed && n_other == 0) n_other = 1;
    for (std::size_t i = 0; i < n_other; ++i) {
      std::string label;
      Trace t = non_affiliate_link(d, ch, spec.unresolvable_rate, label);
      const auto url = add_crawl(t, false, OriginLocation::Description);
      other_lines.push_back({label + ": " + url, false});
    }

    // Layout and ground-truth clarity labels.
    CompensationLevel comp = CompensationLevel::Absent;
    RelationshipLevel rel = RelationshipLevel::Absent;
    const auto block = [&](const std::vector<LinkLine>& ls) {
      for (const auto& l : ls) lines.push_back(l.text);
    };
    const auto follow_block = [&]() {
      if (other_lines.empty()) return;
      lines.emplace_back();
      lines.emplace_back(d.pick(kFollowHeaders));
      block(other_lines);
    };
    if (!p.affiliate) {
      if (!other_lines.empty()) {
        lines.emplace_back(d.pick(kFollowHeaders));
        block(other_lines);
      }
    } else if (tv.shelf_only || p.row == ScriptRow::AbsentAbsent) {
      if (!aff_lines.empty()) {
        lines.emplace_back(d.pick(kPlainHeaders));
        block(aff_lines);
      }
      follow_block();
      if (tv.shelf_only) {
        comp = CompensationLevel::Clear;
        rel = RelationshipLevel::Explicit;
      }
    } else if (mixed) {
      if (p.row == ScriptRow::ClearMixed) {
        comp = CompensationLevel::Clear;
        lines.emplace_back(d.pick(kClearMixed));
      } else if (p.row == ScriptRow::AmbiguousMixed) {
        comp = CompensationLevel::Ambiguous;
        lines.emplace_back(d.pick(kAmbiguousMixed));
      } else {
        lines.emplace_back(d.pick(kAbsentMixed));
      }
      rel = RelationshipLevel::MixedGroup;
      lines.emplace_back();
      std::vector<LinkLine> all = aff_lines;
      all.insert(all.end(), other_lines.begin(), other_lines.end());
      shuffle(std::span<LinkLine>(all), d.engine());
      block(all);
    } else {
      std::span<const std::string_view> headers, inlines;
      if (p.row == ScriptRow::ClearExplicitGrouped) {
        comp = CompensationLevel::Clear;
        headers = kClearHeaders;
        inlines = kClearInline;
      } else if (p.row == ScriptRow::AmbiguousExplicitGrouped) {
        comp = CompensationLevel::Ambiguous;
        headers = kAmbiguousHeaders;
        inlines = kAmbiguousInline;
      } else {
        headers = kAbsentHeaders;
        inlines = kAbsentInline;
      }
      if (d.chance(0.4)) {
        const std::string_view note = d.pick(inlines);
        for (auto& l : aff_lines) l.text += " " + std::string(note);
        lines.emplace_back(d.pick(kPlainHeaders));
        block(aff_lines);
        rel = RelationshipLevel::Explicit;
      } else {
        const bool amazon_note = p.row == ScriptRow::ClearExplicitGrouped &&
                                 p.partner->style == "amazon" && d.chance(0.3);
        lines.emplace_back(amazon_note ? kAmazonHeader : d.pick(headers));
        block(aff_lines);
        rel = aff_lines.size() == 1 ? RelationshipLevel::Explicit : RelationshipLevel::Grouped;
      }
      follow_block();
    }
    if (d.chance(0.5)) {
      lines.emplace_back();
      lines.emplace_back(d.pick(kOutros));
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (i) meta.description_text += '\n';
      meta.description_text += lines[i];
    }

    rec.total_link_count = all_urls.size();
    rec.affiliate_link_count = aff_urls.size();
    rec.is_affiliate_video = rec.affiliate_link_count > 0;
    rec.compensation = comp;
    rec.relationship = rel;
    rec.status = map_status(comp, rel);
    validate_record(rec);

    out.videos.push_back(std::move(meta));
    out.truth.push_back(std::move(tv));
  }
  return out;
}

// ----------------------------------------------------------- validator --

bool has_identifier_flow(const CrawlRecord& r) {
  struct Stored {
    std::string value;
    int hop;
  };
  std::vector<Stored> writes;
  for (const auto& e : r.storage_events) {
    if (e.action == StorageAction::Write && !e.storage_value.empty()) {
      writes.push_back({e.storage_value, e.hop});
    }
  }
  if (writes.empty()) return false;
  for (std::size_t h = 1; h < r.hop_count(); ++h) {
    const auto url = parse_url(r.url_at_hop(h));
    if (!url) continue;
    for (const auto& q : url->query) {
      for (const auto& w : writes) {
        // Unknown write position counts as "before every later hop".
        if (w.hop >= 0 && static_cast<std::size_t>(w.hop) >= h) continue;
        if (q.second == w.value) return true;
        if (w.value.size() >= 4 && q.second.find(w.value) != std::string::npos) return true;
      }
    }
  }
  return false;
}

std::vector<std::string> validate_truth(const GeneratedCorpus& g) {
  std::map<std::string, const CrawlRecord*> by_id;
  for (const auto& c : g.crawls) by_id[c.link_id] = &c;
  std::vector<std::string> bad;
  for (const auto& l : g.links) {
    const auto it = by_id.find(l.link_id);
    if (it == by_id.end() || has_identifier_flow(*it->second) != l.affiliate) bad.push_back(l.link_id);
  }
  return bad;
}

// ---------------------------------------------------------------- I/O --

void write_truth(std::ostream& out, const GeneratedCorpus& g) {
  for (const auto& l : g.links) {
    ordered_json j;
    j["kind"] = "link";
    j["link_id"] = l.link_id;
    j["video_id"] = l.video_id;
    j["affiliate"] = l.affiliate;
    j["pattern"] = l.kind;
    out << j.dump() << '\n';
  }
  for (const auto& t : g.truth) {
    ordered_json j;
    j["kind"] = "video";
    j["english"] = t.english;
    j["row"] = t.row ? json(std::string(to_string(*t.row))) : json(nullptr);
    j["shelf_only"] = t.shelf_only;
    j["record"] = ordered_json::parse(serialize_record(t.record));
    out << j.dump() << '\n';
  }
}

Truth read_truth(std::istream& in) {
  Truth t;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "link") {
        TruthLink l{j.at("link_id").get<std::string>(), j.at("video_id").get<std::string>(),
                    j.at("affiliate").get<bool>(), j.value("pattern", "")};
        t.links[l.link_id] = l;
      } else if (kind == "video") {
        TruthVideo v;
        v.english = j.at("english").get<bool>();
        if (!j.at("row").is_null()) {
          const auto row = parse_script_row(j["row"].get<std::string>());
          if (!row) throw FixtureError("unknown script row");
          v.row = row;
        }
        v.shelf_only = j.value("shelf_only", false);
        v.record = parse_record(j.at("record").dump());
        t.videos[v.record.video_id] = v;
      } else {
        throw FixtureError("unknown kind '" + kind + "'");
      }
    } catch (const std::exception& e) {
      throw FixtureError("truth line " + std::to_string(n) + ": " + e.what());
    }
  }
  return t;
}

Truth load_truth(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FixtureError("cannot read " + path);
  return read_truth(in);
}

}  // namespace affaudit
