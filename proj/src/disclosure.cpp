#include "affaudit/disclosure.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "affaudit/crawl_model.hpp"
#include "affaudit/detail/enum_names.hpp"
#include "affaudit/embedded_data.hpp"

namespace affaudit {

namespace {

constexpr std::array<std::string_view, 3> kCompensationNames = {"Clear", "Ambiguous", "None"};
constexpr std::array<std::string_view, 3> kRelationshipNames = {"Explicit", "Grouped",
                                                                "MixedGroup"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

}  // namespace

std::string_view to_string(Compensation c) { return detail::enum_name(c, kCompensationNames); }
std::string_view to_string(Relationship r) { return detail::enum_name(r, kRelationshipNames); }
std::optional<Compensation> parse_compensation(std::string_view s) {
  return detail::enum_parse<Compensation>(s, kCompensationNames);
}
std::optional<Relationship> parse_relationship(std::string_view s) {
  return detail::enum_parse<Relationship>(s, kRelationshipNames);
}

std::vector<SentenceSegment> segment_sentences(std::string_view text) {
  std::vector<SentenceSegment> out;
  const auto emit = [&](std::size_t b, std::size_t e) {
    while (b < e && is_space(text[b])) ++b;
    while (e > b && is_space(text[e - 1])) --e;
    if (b == e) return;
    out.push_back({std::string(text.substr(b, e - b)), b, e, out.size()});
  };

  const auto links = extract_hyperlinks(text);
  std::size_t next_link = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (next_link < links.size() && i == links[next_link].offset) {
      i += links[next_link].url.size() - 1;
      ++next_link;
      continue;
    }
    const char c = text[i];
    if (c == '\n') {
      emit(start, i);
      start = i + 1;
    } else if (is_terminal(c)) {
      std::size_t j = i;
      while (j + 1 < text.size() && is_terminal(text[j + 1])) ++j;
      if (j + 1 == text.size() || is_space(text[j + 1])) {
        emit(start, j + 1);
        start = j + 1;
      }
      i = j;
    }
  }
  emit(start, text.size());
  return out;
}

DisclosureLexicon parse_lexicon(std::string_view text) {
  DisclosureLexicon lex;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto read = [&](const char* key, std::vector<std::string>& dst) {
      if (j.contains(key)) dst = j.at(key).get<std::vector<std::string>>();
    };
    read("markers", lex.markers);
    read("compensation", lex.compensation);
    read("beneficiaries", lex.beneficiaries);
    read("support", lex.support);
    read("purchase_context", lex.purchase_context);
    read("negations", lex.negations);
    read("non_disclosure", lex.non_disclosure);
    read("mixed_scope", lex.mixed_scope);
  } catch (const nlohmann::json::exception& e) {
    throw DisclosureError(std::string("lexicon: ") + e.what());
  }
  return lex;
}

const DisclosureLexicon& default_lexicon() {
  static const DisclosureLexicon lex = parse_lexicon(embedded::file("disclosure_lexicon.json"));
  return lex;
}

std::vector<std::string> parse_keywords(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    while (!line.empty() && is_space(line.front())) line.remove_prefix(1);
    while (!line.empty() && is_space(line.back())) line.remove_suffix(1);
    if (!line.empty()) {
      std::string k(line);
      std::transform(k.begin(), k.end(), k.begin(), lower);
      out.push_back(std::move(k));
    }
    pos = nl + 1;
  }
  return out;
}

const std::vector<std::string>& default_keywords() {
  static const std::vector<std::string> k = parse_keywords(embedded::file("disclosure_keywords.txt"));
  return k;
}

bool keyword_match(std::string_view sentence, std::span<const std::string> keywords) {
  std::string s(sentence);
  std::transform(s.begin(), s.end(), s.begin(), lower);
  for (const auto& k : keywords) {
    if (k.empty()) continue;
    for (auto pos = s.find(k); pos != std::string::npos; pos = s.find(k, pos + 1)) {
      const bool left_ok = !is_alnum(k.front()) || pos == 0 || !is_alnum(s[pos - 1]);
      const auto end = pos + k.size();
      const bool right_ok = !is_alnum(k.back()) || end == s.size() || !is_alnum(s[end]);
      if (left_ok && right_ok) return true;
    }
  }
  return false;
}

bool keyword_baseline(std::string_view sentence) {
  return keyword_match(sentence, default_keywords());
}

RuleSet::RuleSet(const DisclosureLexicon& lex)
    : markers_(compile(lex.markers, "markers")),
      compensation_(compile(lex.compensation, "compensation")),
      beneficiaries_(compile(lex.beneficiaries, "beneficiaries")),
      support_(compile(lex.support, "support")),
      purchase_(compile(lex.purchase_context, "purchase_context")),
      negations_(compile(lex.negations, "negations")),
      non_disclosure_(compile(lex.non_disclosure, "non_disclosure")),
      mixed_scope_(compile(lex.mixed_scope, "mixed_scope")) {}

std::optional<std::regex> RuleSet::compile(const std::vector<std::string>& patterns,
                                           const char* group) {
  if (patterns.empty()) return std::nullopt;
  std::string joined;
  for (const auto& p : patterns) {
    if (!joined.empty()) joined += '|';
    joined += "(?:" + p + ")";
  }
  try {
    return std::regex(joined, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
  } catch (const std::regex_error& e) {
    throw DisclosureError(std::string("lexicon group ") + group + ": " + e.what());
  }
}

bool RuleSet::search(const std::optional<std::regex>& re, const std::string& text) {
  return re && std::regex_search(text, *re);
}

bool RuleSet::clear_compensation(const std::string& text) const {
  return search(compensation_, text) && search(beneficiaries_, text);
}

bool RuleSet::is_disclosure(std::string_view sentence) const {
  const std::string s(sentence);
  if (clear_compensation(s)) return true;
  if (search(negations_, s)) return false;
  const std::string masked = non_disclosure_ ? std::regex_replace(s, *non_disclosure_, " ") : s;
  if (search(markers_, masked)) return true;
  return search(support_, masked) && search(purchase_, masked);
}

Compensation RuleSet::compensation(std::string_view segment_text) const {
  const std::string s(segment_text);
  if (clear_compensation(s)) return Compensation::Clear;
  if (search(support_, s)) return Compensation::Ambiguous;
  return Compensation::None;
}

bool RuleSet::scopes_whole_description(std::string_view segment_text) const {
  return search(mixed_scope_, std::string(segment_text));
}

const RuleSet& default_rules() {
  static const RuleSet rules(default_lexicon());
  return rules;
}

namespace {

class ReferenceClassifier : public DisclosureClassifier {
 public:
  std::string id() const override { return "reference_rules"; }
  std::vector<bool> detect(std::span<const std::string> sentences) override {
    std::vector<bool> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) out.push_back(default_rules().is_disclosure(s));
    return out;
  }
  std::vector<Compensation> compensation(std::span<const std::string> segments) override {
    std::vector<Compensation> out;
    out.reserve(segments.size());
    for (const auto& s : segments) out.push_back(default_rules().compensation(s));
    return out;
  }
};

class KeywordClassifier : public ReferenceClassifier {
 public:
  std::string id() const override { return "keyword_baseline"; }
  std::vector<bool> detect(std::span<const std::string> sentences) override {
    std::vector<bool> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) out.push_back(keyword_baseline(s));
    return out;
  }
};

class TempFile {
 public:
  TempFile() {
    auto tmpl = (std::filesystem::temp_directory_path() / "affaudit-XXXXXX").string();
    const int fd = ::mkstemp(tmpl.data());
    if (fd < 0) throw DisclosureError("cannot create temporary file");
    ::close(fd);
    path_ = tmpl;
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (const char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

}  // namespace

std::unique_ptr<DisclosureClassifier> make_classifier(std::string_view spec) {
  if (spec == "rules" || spec == "reference_rules") return std::make_unique<ReferenceClassifier>();
  if (spec == "keywords" || spec == "keyword_baseline") return std::make_unique<KeywordClassifier>();
  constexpr std::string_view prefix = "external:";
  if (spec.substr(0, prefix.size()) == prefix) {
    const auto cmd = spec.substr(prefix.size());
    if (cmd.empty()) throw DisclosureError("external classifier needs a command");
    return std::make_unique<ExternalClassifier>(std::string(cmd));
  }
  throw DisclosureError("unknown classifier '" + std::string(spec) +
                        "' (expected rules, keywords or external:<cmd>)");
}

ExternalClassifier::ExternalClassifier(std::string command) : command_(std::move(command)) {}

std::string ExternalClassifier::id() const { return "external:" + command_; }

std::vector<std::string> ExternalClassifier::run(std::string_view task,
                                                 std::span<const std::string> texts) const {
  if (texts.empty()) return {};
  TempFile in, out;
  {
    std::ofstream f(in.path(), std::ios::binary);
    for (const auto& t : texts) {
      std::string line(t);
      std::replace_if(line.begin(), line.end(),
                      [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
      f << task << '\t' << line << '\n';
    }
    if (!f) throw DisclosureError("external classifier: cannot write input");
  }
  const std::string cmd =
      "(" + command_ + ") < " + shell_quote(in.path()) + " > " + shell_quote(out.path());
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw DisclosureError("external classifier unavailable: '" + command_ + "' exited with status " +
                          std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : status));
  }
  std::ifstream f(out.path(), std::ios::binary);
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(f, line)) {
    while (!line.empty() && is_space(line.back())) line.pop_back();
    labels.push_back(line);
  }
  if (labels.size() != texts.size()) {
    throw DisclosureError("external classifier returned " + std::to_string(labels.size()) +
                          " labels for " + std::to_string(texts.size()) + " inputs");
  }
  return labels;
}

std::vector<bool> ExternalClassifier::detect(std::span<const std::string> sentences) {
  std::vector<bool> out;
  for (const auto& l : run("detect", sentences)) {
    if (l == "disclosure") {
      out.push_back(true);
    } else if (l == "non-disclosure") {
      out.push_back(false);
    } else {
      throw DisclosureError("external classifier: bad detection label '" + l + "'");
    }
  }
  return out;
}

std::vector<Compensation> ExternalClassifier::compensation(std::span<const std::string> segments) {
  std::vector<Compensation> out;
  for (const auto& l : run("compensation", segments)) {
    const auto c = parse_compensation(l);
    if (!c) throw DisclosureError("external classifier: bad compensation label '" + l + "'");
    out.push_back(*c);
  }
  return out;
}

RelationshipLabel label_relationship(std::string_view description, std::size_t seg_begin,
                                     std::size_t seg_end, std::string_view segment_text,
                                     std::span<const DescribedLink> links, const RuleSet& rules) {
  if (links.empty()) return {Relationship::Explicit, true};
  if (rules.scopes_whole_description(segment_text)) return {Relationship::MixedGroup, false};

  std::vector<std::size_t> line_starts{0};
  for (std::size_t i = 0; i < description.size(); ++i) {
    if (description[i] == '\n') line_starts.push_back(i + 1);
  }
  const auto line_of = [&](std::size_t offset) {
    return static_cast<std::size_t>(
        std::upper_bound(line_starts.begin(), line_starts.end(), offset) - line_starts.begin() - 1);
  };
  const auto blank = [&](std::size_t line) {
    const auto b = line_starts[line];
    const auto e = line + 1 < line_starts.size() ? line_starts[line + 1] : description.size();
    return std::all_of(description.begin() + static_cast<std::ptrdiff_t>(b),
                       description.begin() + static_cast<std::ptrdiff_t>(e), is_space);
  };
  std::multimap<std::size_t, const DescribedLink*> by_line;
  for (const auto& l : links) by_line.emplace(line_of(l.offset), &l);

  const std::size_t first = line_of(seg_begin);
  const std::size_t last = line_of(seg_end > seg_begin ? seg_end - 1 : seg_begin);
  const auto collect = [&](std::size_t lo, std::size_t hi) {
    std::vector<const DescribedLink*> out;
    for (auto it = by_line.lower_bound(lo); it != by_line.end() && it->first <= hi; ++it) {
      out.push_back(it->second);
    }
    return out;
  };

  auto scope = collect(first, last);
  if (scope.empty() && last + 1 < line_starts.size() && !blank(last + 1)) {
    std::size_t hi = last + 1;
    while (hi + 1 < line_starts.size() && !blank(hi + 1)) ++hi;
    scope = collect(last + 1, hi);
  }
  if (scope.empty() && first > 0 && !blank(first - 1)) {
    std::size_t lo = first - 1;
    while (lo > 0 && !blank(lo - 1)) --lo;
    scope = collect(lo, first - 1);
  }
  if (scope.empty()) {
    for (const auto& l : links) scope.push_back(&l);
  }

  std::size_t affiliate = 0;
  for (const auto* l : scope) {
    if (!l->affiliate) return {Relationship::MixedGroup, false};
    ++affiliate;
  }
  return {affiliate == 1 ? Relationship::Explicit : Relationship::Grouped, false};
}

namespace {

struct PendingSegment {
  std::size_t input = 0;
  DisclosureSegment segment;
};

std::vector<std::vector<DisclosureSegment>> run_detection(
    std::span<const DescriptionInput> inputs,
    std::span<const std::vector<SentenceSegment>> sentences, DisclosureClassifier& classifier) {
  std::vector<std::string> texts;
  for (const auto& ss : sentences) {
    for (const auto& s : ss) texts.push_back(s.text);
  }
  const auto flags = classifier.detect(texts);
  if (flags.size() != texts.size()) throw DisclosureError("classifier returned wrong count");

  std::vector<PendingSegment> pending;
  std::size_t k = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& ss = sentences[i];
    for (std::size_t s = 0; s < ss.size(); ++s, ++k) {
      if (!flags[k]) continue;
      const bool extend = s > 0 && flags[k - 1] && !pending.empty() && pending.back().input == i;
      if (!extend) {
        pending.push_back({i, {}});
        pending.back().segment.begin = ss[s].begin;
      }
      auto& seg = pending.back().segment;
      seg.sentence_indexes.push_back(ss[s].index);
      seg.end = ss[s].end;
    }
  }

  std::vector<std::string> segment_texts;
  segment_texts.reserve(pending.size());
  for (auto& p : pending) {
    const auto d = inputs[p.input].description;
    p.segment.text = std::string(d.substr(p.segment.begin, p.segment.end - p.segment.begin));
    segment_texts.push_back(p.segment.text);
  }
  const auto comp = classifier.compensation(segment_texts);
  if (comp.size() != pending.size()) throw DisclosureError("classifier returned wrong count");

  std::vector<std::vector<DisclosureSegment>> out(inputs.size());
  const auto id = classifier.id();
  for (std::size_t p = 0; p < pending.size(); ++p) {
    auto& seg = pending[p].segment;
    const auto& in = inputs[pending[p].input];
    seg.compensation = comp[p];
    const auto rel = label_relationship(in.description, seg.begin, seg.end, seg.text, in.links);
    seg.relationship = rel.relationship;
    seg.vacuous_relationship = rel.vacuous;
    seg.classifier_id = id;
    out[pending[p].input].push_back(std::move(seg));
  }
  return out;
}

}  // namespace

std::vector<DisclosureSegment> detect_disclosures(std::string_view description,
                                                  std::span<const SentenceSegment> sentences,
                                                  std::span<const DescribedLink> links,
                                                  DisclosureClassifier& classifier) {
  const DescriptionInput input{description, {links.begin(), links.end()}};
  const std::vector<SentenceSegment> ss(sentences.begin(), sentences.end());
  return run_detection({&input, 1}, {&ss, 1}, classifier).front();
}

std::vector<std::vector<DisclosureSegment>> detect_disclosures_batch(
    std::span<const DescriptionInput> inputs, DisclosureClassifier& classifier) {
  std::vector<std::vector<SentenceSegment>> sentences;
  sentences.reserve(inputs.size());
  for (const auto& in : inputs) sentences.push_back(segment_sentences(in.description));
  return run_detection(inputs, sentences, classifier);
}

VideoDisclosure aggregate_video(std::span<const DisclosureSegment> segments) {
  VideoDisclosure v;
  for (const auto& s : segments) {
    if (!v.compensation || s.compensation < *v.compensation) v.compensation = s.compensation;
    if (!v.relationship || s.relationship < *v.relationship) v.relationship = s.relationship;
  }
  return v;
}

bool is_english(std::string_view tag) {
  if (tag.size() < 2 || lower(tag[0]) != 'e' || lower(tag[1]) != 'n') return false;
  return tag.size() == 2 || tag[2] == '-' || tag[2] == '_';
}

double cohens_kappa(std::span<const AnnotationPair> pairs) {
  if (pairs.empty()) throw DisclosureError("kappa needs at least one pair");
  std::map<std::string, std::pair<double, double>> marginals;
  double agree = 0.0;
  for (const auto& p : pairs) {
    marginals[p.label_a].first += 1.0;
    marginals[p.label_b].second += 1.0;
    agree += p.label_a == p.label_b;
  }
  const double n = static_cast<double>(pairs.size());
  const double po = agree / n;
  double pe = 0.0;
  for (const auto& [_, m] : marginals) pe += (m.first / n) * (m.second / n);
  if (pe >= 1.0) return 1.0;
  return (po - pe) / (1.0 - pe);
}

}  // namespace affaudit
