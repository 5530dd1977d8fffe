#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <regex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace affaudit {

class DisclosureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Compensation { Clear, Ambiguous, None };
enum class Relationship { Explicit, Grouped, MixedGroup };

std::string_view to_string(Compensation c);
std::string_view to_string(Relationship r);
std::optional<Compensation> parse_compensation(std::string_view s);
std::optional<Relationship> parse_relationship(std::string_view s);

struct SentenceSegment {
  std::string text;
  std::size_t begin = 0;  // byte offsets into the description, [begin, end)
  std::size_t end = 0;
  std::size_t index = 0;

  bool operator==(const SentenceSegment&) const = default;
};

/// Splits after runs of . ! ? that are followed by whitespace, and at line
/// breaks. URLs are never split. Segments are trimmed of surrounding
/// whitespace and empty ones are dropped, so the text between consecutive
/// spans is whitespace only.
std::vector<SentenceSegment> segment_sentences(std::string_view description);

struct DisclosureSegment {
  std::vector<std::size_t> sentence_indexes;
  std::string text;  // description slice from the first to the last sentence
  std::size_t begin = 0;
  std::size_t end = 0;
  Compensation compensation = Compensation::None;
  Relationship relationship = Relationship::Explicit;
  bool vacuous_relationship = false;  // description had no links at all
  std::string classifier_id;
};

/// Editable rule lexicon behind the reference classifier. Every entry is a
/// case-insensitive ECMAScript regex; see data/disclosure_lexicon.json.
struct DisclosureLexicon {
  std::vector<std::string> markers;            // disclosure vocabulary
  std::vector<std::string> compensation;       // monetary predicates
  std::vector<std::string> beneficiaries;      // first-person / channel
  std::vector<std::string> support;            // vague support language
  std::vector<std::string> purchase_context;   // links, buying
  std::vector<std::string> negations;          // "not sponsored"
  std::vector<std::string> non_disclosure;     // "affiliate program"
  std::vector<std::string> mixed_scope;        // "some of the links"
};

DisclosureLexicon parse_lexicon(std::string_view json);
const DisclosureLexicon& default_lexicon();

/// Keyword baseline markers, one per line; blank lines ignored.
std::vector<std::string> parse_keywords(std::string_view text);
const std::vector<std::string>& default_keywords();

/// True iff the sentence contains a marker, case-insensitively, with
/// non-alphanumeric boundaries at the marker's alphanumeric ends.
bool keyword_match(std::string_view sentence, std::span<const std::string> keywords);
bool keyword_baseline(std::string_view sentence);

/// Rule engine for the reference classifier and for compensation labels.
class RuleSet {
 public:
  explicit RuleSet(const DisclosureLexicon& lexicon);

  bool is_disclosure(std::string_view sentence) const;
  Compensation compensation(std::string_view segment_text) const;
  /// Segment wording that covers the whole description rather than nearby links.
  bool scopes_whole_description(std::string_view segment_text) const;

 private:
  static std::optional<std::regex> compile(const std::vector<std::string>& patterns,
                                           const char* group);
  static bool search(const std::optional<std::regex>& re, const std::string& text);
  bool clear_compensation(const std::string& text) const;

  std::optional<std::regex> markers_, compensation_, beneficiaries_, support_, purchase_,
      negations_, non_disclosure_, mixed_scope_;
};

const RuleSet& default_rules();

/// Sentence-level detection and segment-level compensation. Calls are
/// batched; results come back in input order.
class DisclosureClassifier {
 public:
  virtual ~DisclosureClassifier() = default;
  virtual std::string id() const = 0;
  virtual std::vector<bool> detect(std::span<const std::string> sentences) = 0;
  virtual std::vector<Compensation> compensation(std::span<const std::string> segments) = 0;
};

/// "rules", "keywords" or "external:<shell command>". The keyword baseline
/// only detects; it labels compensation with the reference rules. Throws
/// DisclosureError for unknown names.
std::unique_ptr<DisclosureClassifier> make_classifier(std::string_view spec);

/// External process protocol: the command reads one "task<TAB>text" record
/// per line on stdin (task is "detect" or "compensation"; tabs and line
/// breaks in text become spaces) and writes one label per line on stdout,
/// same order: "disclosure"/"non-disclosure", or Clear/Ambiguous/None.
/// A failing command or a short or malformed answer throws DisclosureError.
class ExternalClassifier : public DisclosureClassifier {
 public:
  explicit ExternalClassifier(std::string command);
  std::string id() const override;
  std::vector<bool> detect(std::span<const std::string> sentences) override;
  std::vector<Compensation> compensation(std::span<const std::string> segments) override;

 private:
  std::vector<std::string> run(std::string_view task, std::span<const std::string> texts) const;
  std::string command_;
};

struct DescribedLink {
  std::string url;
  std::size_t offset = 0;  // byte offset in the description
  bool affiliate = false;
};

struct RelationshipLabel {
  Relationship relationship = Relationship::Explicit;
  bool vacuous = false;
};

/// Scope of a segment, by line geometry: links on the segment's own lines,
/// else links in the block of non-blank lines directly below, else the block
/// directly above, else every link in the description. Whole-description
/// wording forces MixedGroup. One affiliate link in scope is Explicit,
/// several is Grouped, any non-affiliate link is MixedGroup. No links at all
/// gives a vacuous Explicit.
RelationshipLabel label_relationship(std::string_view description, std::size_t seg_begin,
                                     std::size_t seg_end, std::string_view segment_text,
                                     std::span<const DescribedLink> links,
                                     const RuleSet& rules = default_rules());

/// Merges maximal runs of detected sentences and labels both dimensions.
std::vector<DisclosureSegment> detect_disclosures(std::string_view description,
                                                  std::span<const SentenceSegment> sentences,
                                                  std::span<const DescribedLink> links,
                                                  DisclosureClassifier& classifier);

struct DescriptionInput {
  std::string_view description;
  std::vector<DescribedLink> links;
};

/// detect_disclosures over many descriptions with one detection batch and
/// one compensation batch in total.
std::vector<std::vector<DisclosureSegment>> detect_disclosures_batch(
    std::span<const DescriptionInput> inputs, DisclosureClassifier& classifier);

/// Video-level labels: the most compliant label of each dimension over all
/// segments; nullopt when there is no disclosure.
struct VideoDisclosure {
  std::optional<Compensation> compensation;
  std::optional<Relationship> relationship;
};

VideoDisclosure aggregate_video(std::span<const DisclosureSegment> segments);

/// "en" or "en-*", case-insensitive.
bool is_english(std::string_view language_tag);

struct AnnotationPair {
  std::string item_id;
  std::string label_a;
  std::string label_b;
};

/// Cohen's kappa. 1 when expected agreement is 1 (a single shared label).
/// Throws DisclosureError on empty input.
double cohens_kappa(std::span<const AnnotationPair> pairs);

}  // namespace affaudit
