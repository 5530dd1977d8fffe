#include "affaudit/pattern_labeler.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "affaudit/detail/enum_names.hpp"
#include "affaudit/embedded_data.hpp"

namespace affaudit {

namespace {
constexpr std::array<std::string_view, 2> kTargetNames = {"Affiliate", "NonAffiliate"};
constexpr std::array<std::string_view, 3> kPhase1Names = {"KnownAffiliate", "KnownNonAffiliate",
                                                          "Unknown"};
}  // namespace

std::string_view to_string(RuleTarget t) { return detail::enum_name(t, kTargetNames); }
std::string_view to_string(Phase1Label l) { return detail::enum_name(l, kPhase1Names); }
std::optional<Phase1Label> parse_phase1_label(std::string_view s) {
  return detail::enum_parse<Phase1Label>(s, kPhase1Names);
}

PatternRegistry::PatternRegistry(std::vector<PatternRule> rules, std::vector<std::string> shorteners)
    : rules_(std::move(rules)), shorteners_(std::move(shorteners)) {
  std::unordered_set<std::string> ids;
  compiled_.reserve(rules_.size());
  for (const auto& rule : rules_) {
    if (rule.rule_id.empty()) throw RegistryError("", "rule without rule_id");
    if (!ids.insert(rule.rule_id).second) throw RegistryError(rule.rule_id, "duplicate rule_id");
    if (!rule.host_pattern && !rule.path_pattern && rule.query_keys.empty()) {
      throw RegistryError(rule.rule_id, "needs host_pattern, path_pattern or query_keys");
    }
    Compiled c;
    try {
      if (rule.host_pattern) c.host.emplace(*rule.host_pattern, std::regex::ECMAScript | std::regex::icase);
      if (rule.path_pattern) c.path.emplace(*rule.path_pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw RegistryError(rule.rule_id, std::string("uncompilable pattern: ") + e.what());
    }
    compiled_.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (rules_[i].target == RuleTarget::Affiliate) order_.push_back(i);
  }
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (rules_[i].target == RuleTarget::NonAffiliate) order_.push_back(i);
  }
  for (auto& s : shorteners_) s = to_lower(s);
}

bool PatternRegistry::is_shortener(std::string_view host) const {
  const auto h = to_lower(host);
  const std::string_view bare = std::string_view(h).substr(h.rfind("www.", 0) == 0 ? 4 : 0);
  return std::find(shorteners_.begin(), shorteners_.end(), bare) != shorteners_.end();
}

std::optional<std::size_t> PatternRegistry::match(const Url& url) const {
  const std::string path = url.path.empty() ? "/" : url.path;
  for (const auto i : order_) {
    const auto& rule = rules_[i];
    const auto& c = compiled_[i];
    if (c.host && !std::regex_match(url.host, *c.host)) continue;
    if (c.path && !std::regex_match(path, *c.path)) continue;
    const bool keys_ok = std::all_of(rule.query_keys.begin(), rule.query_keys.end(),
                                     [&](const std::string& key) {
                                       return std::any_of(url.query.begin(), url.query.end(),
                                                          [&](const QueryParam& p) {
                                                            return p.first == key;
                                                          });
                                     });
    if (!keys_ok) continue;
    return i;
  }
  return std::nullopt;
}

PatternRegistry parse_registry(std::string_view text) {
  const bool blank = std::all_of(text.begin(), text.end(),
                                 [](unsigned char c) { return std::isspace(c); });
  if (blank) return PatternRegistry{};
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw RegistryError("", std::string("registry does not parse: ") + e.what());
  }
  if (!j.is_object()) throw RegistryError("", "registry must be a JSON object");

  std::vector<PatternRule> rules;
  if (const auto it = j.find("rules"); it != j.end()) {
    if (!it->is_array()) throw RegistryError("", "'rules' must be an array");
    for (const auto& r : *it) {
      PatternRule rule;
      rule.rule_id = r.value("rule_id", "");
      const auto target = r.value("target", "");
      const auto parsed = detail::enum_parse<RuleTarget>(target, kTargetNames);
      if (!parsed) throw RegistryError(rule.rule_id, "unknown target '" + target + "'");
      rule.target = *parsed;
      if (r.contains("host_pattern") && !r["host_pattern"].is_null()) {
        rule.host_pattern = r["host_pattern"].get<std::string>();
      }
      if (r.contains("path_pattern") && !r["path_pattern"].is_null()) {
        rule.path_pattern = r["path_pattern"].get<std::string>();
      }
      if (r.contains("query_keys")) rule.query_keys = r["query_keys"].get<std::vector<std::string>>();
      rule.notes = r.value("notes", "");
      rules.push_back(std::move(rule));
    }
  }
  std::vector<std::string> shorteners;
  if (const auto it = j.find("shorteners"); it != j.end()) {
    shorteners = it->get<std::vector<std::string>>();
  }
  return PatternRegistry(std::move(rules), std::move(shorteners));
}

PatternRegistry load_registry(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RegistryError("", "cannot read registry " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_registry(buf.str());
}

std::string_view default_registry_text() { return embedded::file("default_registry.json"); }

const PatternRegistry& default_registry() {
  static const PatternRegistry registry = parse_registry(default_registry_text());
  return registry;
}

UrlLabel label_url(std::string_view url, const PatternRegistry& registry) {
  UrlLabel out;
  const auto parsed = parse_url(url);
  if (!parsed) {
    out.diagnostic = "unparseable URL: " + std::string(url);
    return out;
  }
  if (const auto i = registry.match(*parsed)) {
    const auto& rule = registry.rules()[*i];
    out.label = rule.target == RuleTarget::Affiliate ? Phase1Label::KnownAffiliate
                                                     : Phase1Label::KnownNonAffiliate;
    out.rule_id = rule.rule_id;
  }
  return out;
}

double CorpusLabels::coverage() const {
  const auto total = known_affiliate + known_non_affiliate + unknown;
  return total == 0 ? 0.0 : static_cast<double>(known_affiliate + known_non_affiliate) / total;
}

CorpusLabels label_corpus(const Corpus& corpus, const PatternRegistry& registry) {
  CorpusLabels out;
  for (const auto& r : corpus.crawls()) {
    auto label = label_url(r.original_url, registry);
    switch (label.label) {
      case Phase1Label::KnownAffiliate: ++out.known_affiliate; break;
      case Phase1Label::KnownNonAffiliate: ++out.known_non_affiliate; break;
      case Phase1Label::Unknown: ++out.unknown; break;
    }
    out.by_link.emplace(r.link_id, std::move(label));
  }
  return out;
}

}  // namespace affaudit
