#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "affaudit/crawl_model.hpp"

namespace affaudit {

enum class RuleTarget { Affiliate, NonAffiliate };
enum class Phase1Label { KnownAffiliate, KnownNonAffiliate, Unknown };

std::string_view to_string(RuleTarget t);
std::string_view to_string(Phase1Label l);
std::optional<Phase1Label> parse_phase1_label(std::string_view s);

struct PatternRule {
  std::string rule_id;
  RuleTarget target = RuleTarget::Affiliate;
  std::optional<std::string> host_pattern;  // full match against the lowercased host
  std::optional<std::string> path_pattern;  // full match against the path ("/" when empty)
  std::vector<std::string> query_keys;      // all must be present; case-sensitive
  std::string notes;
};

class RegistryError : public std::runtime_error {
 public:
  RegistryError(const std::string& rule_id, const std::string& what)
      : std::runtime_error(rule_id.empty() ? what : "rule '" + rule_id + "': " + what),
        rule_id_(rule_id) {}
  const std::string& rule_id() const { return rule_id_; }

 private:
  std::string rule_id_;
};

/// Compiled, immutable rule set. Affiliate rules are tried before
/// NonAffiliate rules; within a target, file order decides.
class PatternRegistry {
 public:
  PatternRegistry() = default;
  explicit PatternRegistry(std::vector<PatternRule> rules, std::vector<std::string> shorteners = {});

  const std::vector<PatternRule>& rules() const { return rules_; }
  const std::vector<std::string>& shorteners() const { return shorteners_; }
  std::size_t size() const { return rules_.size(); }
  bool is_shortener(std::string_view host) const;

  /// Index into rules() of the first matching rule, in priority order.
  std::optional<std::size_t> match(const Url& url) const;

 private:
  struct Compiled {
    std::optional<std::regex> host;
    std::optional<std::regex> path;
  };
  std::vector<PatternRule> rules_;
  std::vector<Compiled> compiled_;
  std::vector<std::size_t> order_;
  std::vector<std::string> shorteners_;
};

PatternRegistry parse_registry(std::string_view text);
PatternRegistry load_registry(const std::string& path);
/// The registry bundled with the build (data/default_registry.json).
const PatternRegistry& default_registry();
std::string_view default_registry_text();

struct UrlLabel {
  Phase1Label label = Phase1Label::Unknown;
  std::string rule_id;     // empty unless a rule matched
  std::string diagnostic;  // set for unparseable input
};

UrlLabel label_url(std::string_view url, const PatternRegistry& registry);

struct CorpusLabels {
  std::map<std::string, UrlLabel> by_link;  // link_id -> label
  std::size_t known_affiliate = 0;
  std::size_t known_non_affiliate = 0;
  std::size_t unknown = 0;

  /// Fraction of links that received a non-Unknown label (0 for no links).
  double coverage() const;
};

CorpusLabels label_corpus(const Corpus& corpus, const PatternRegistry& registry);

}  // namespace affaudit
