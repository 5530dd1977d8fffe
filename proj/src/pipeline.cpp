#include "affaudit/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "affaudit/checksum.hpp"
#include "affaudit/detail/enum_names.hpp"
#include "affaudit/interaction_graph.hpp"
#include "affaudit/rng.hpp"
#include "affaudit/split.hpp"
#include "affaudit/stats.hpp"

namespace affaudit {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::array<std::string_view, 5> kVerdictNames = {
    "KnownAffiliate", "KnownNonAffiliate", "PredictedAffiliate", "PredictedNonAffiliate",
    "Unresolvable"};

constexpr std::uint64_t kStreamRunSeeds = 100;
constexpr std::uint64_t kStreamEffectSample = 51;
constexpr std::uint64_t kStreamEffectBoot = 52;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string basename_of(const std::string& path) { return fs::path(path).filename().string(); }

std::string read_file(const std::string& path, const std::string& stage) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError(stage, basename_of(path), "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

ordered_json metrics_json(const BinaryMetrics& m) {
  ordered_json j;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["fn"] = m.fn;
  j["tn"] = m.tn;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  return j;
}

}  // namespace

PipelineError::PipelineError(std::string stage, std::string record_id, const std::string& message)
    : std::runtime_error("[" + stage + "] " + (record_id.empty() ? "" : record_id + ": ") + message),
      stage_(std::move(stage)),
      record_id_(std::move(record_id)) {}

// ------------------------------------------------------------ features --

std::string features_csv(std::span<const FeatureVector> features) {
  std::string out = "link_id";
  for (const auto name : feature_names()) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (const auto& fv : features) {
    out += fv.link_id;
    for (const double v : fv.values) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<FeatureVector> parse_features_csv(std::string_view text) {
  std::vector<FeatureVector> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (line_no == 1) {
      bool ok = cells.size() == kFeatureCount + 1 && cells[0] == "link_id";
      for (std::size_t i = 0; ok && i < kFeatureCount; ++i) ok = cells[i + 1] == feature_names()[i];
      if (!ok) throw std::runtime_error("features: header does not match the feature schema");
      continue;
    }
    if (cells.size() != kFeatureCount + 1) {
      throw std::runtime_error("features line " + std::to_string(line_no) + ": expected " +
                               std::to_string(kFeatureCount + 1) + " cells");
    }
    FeatureVector fv;
    fv.link_id = cells[0];
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      const auto& c = cells[i + 1];
      char* endp = nullptr;
      fv.values[i] = std::strtod(c.c_str(), &endp);
      if (c.empty() || endp != c.c_str() + c.size()) {
        throw std::runtime_error("features line " + std::to_string(line_no) + ": bad number '" + c + "'");
      }
    }
    out.push_back(std::move(fv));
  }
  return out;
}

std::vector<FeatureVector> corpus_features(const Corpus& corpus) {
  std::vector<FeatureVector> out;
  out.reserve(corpus.crawls().size());
  for (const auto& c : corpus.crawls()) {
    try {
      const auto g = build_graph(c);
      const auto problems = check_graph(g);
      if (!problems.empty()) throw PipelineError("graph", c.link_id, problems.front());
      out.push_back(extract_features(g));
    } catch (const PipelineError&) {
      throw;
    } catch (const std::exception& e) {
      throw PipelineError("graph", c.link_id, e.what());
    }
  }
  return out;
}

std::map<std::string, bool> load_link_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("labels", basename_of(path), "cannot read " + path);
  std::map<std::string, bool> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      if (j.value("kind", "") != "link") continue;
      out[j.at("link_id").get<std::string>()] = j.at("affiliate").get<bool>();
    } catch (const json::exception& e) {
      throw PipelineError("labels", "line " + std::to_string(n), e.what());
    }
  }
  return out;
}

// ------------------------------------------------------------ verdicts --

std::string_view to_string(VerdictKind k) { return detail::enum_name(k, kVerdictNames); }
std::optional<VerdictKind> parse_verdict_kind(std::string_view s) {
  return detail::enum_parse<VerdictKind>(s, kVerdictNames);
}

std::vector<LinkVerdict> classify_links(const Corpus& corpus, const CorpusLabels& phase1,
                                        std::span<const FeatureVector> features,
                                        const ForestModel* model, const PatternRegistry& registry) {
  std::map<std::string_view, const FeatureVector*> fv_by_id;
  for (const auto& fv : features) fv_by_id[fv.link_id] = &fv;
  std::vector<LinkVerdict> out;
  out.reserve(corpus.crawls().size());
  for (const auto& c : corpus.crawls()) {
    LinkVerdict v;
    v.link_id = c.link_id;
    v.video_id = c.video_id;
    const auto it = phase1.by_link.find(c.link_id);
    const auto p1 = it == phase1.by_link.end() ? Phase1Label::Unknown : it->second.label;
    if (it != phase1.by_link.end()) v.rule_id = it->second.rule_id;
    const auto url = parse_url(c.original_url);
    if (p1 == Phase1Label::KnownAffiliate) {
      v.kind = VerdictKind::KnownAffiliate;
    } else if (p1 == Phase1Label::KnownNonAffiliate) {
      v.kind = VerdictKind::KnownNonAffiliate;
    } else if (!url || (c.redirects.empty() && registry.is_shortener(url->host))) {
      v.kind = VerdictKind::Unresolvable;
    } else {
      if (!model) throw PipelineError("classify", c.link_id, "no model: supply a model or training labels");
      const auto f = fv_by_id.find(c.link_id);
      if (f == fv_by_id.end()) throw PipelineError("classify", c.link_id, "no feature vector");
      try {
        const auto pred = predict(*model, *f->second);
        v.kind = pred.affiliate ? VerdictKind::PredictedAffiliate : VerdictKind::PredictedNonAffiliate;
        v.score = pred.score;
      } catch (const std::exception& e) {
        throw PipelineError("classify", c.link_id, e.what());
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::string verdicts_jsonl(std::span<const LinkVerdict> verdicts) {
  std::string out;
  for (const auto& v : verdicts) {
    ordered_json j;
    j["link_id"] = v.link_id;
    j["video_id"] = v.video_id;
    j["verdict"] = to_string(v.kind);
    j["affiliate"] = v.affiliate();
    j["rule_id"] = v.rule_id;
    j["score"] = v.score ? json(*v.score) : json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<LinkVerdict> parse_verdicts_jsonl(std::string_view text) {
  std::vector<LinkVerdict> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      LinkVerdict v;
      v.link_id = j.at("link_id").get<std::string>();
      v.video_id = j.at("video_id").get<std::string>();
      const auto kind = parse_verdict_kind(j.at("verdict").get<std::string>());
      if (!kind) throw std::runtime_error("unknown verdict");
      v.kind = *kind;
      v.rule_id = j.value("rule_id", "");
      if (j.contains("score") && !j["score"].is_null()) v.score = j["score"].get<double>();
      out.push_back(std::move(v));
    } catch (const std::exception& e) {
      throw std::runtime_error("verdicts line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------- disclosure --

std::vector<VideoDisclosureResult> analyze_disclosures(const Corpus& corpus,
                                                       std::span<const LinkVerdict> verdicts,
                                                       DisclosureClassifier& classifier) {
  std::map<std::string_view, const LinkVerdict*> verdict_of;
  for (const auto& v : verdicts) verdict_of[v.link_id] = &v;

  std::vector<VideoDisclosureResult> results;
  std::vector<DescriptionInput> inputs;
  for (const auto& video : corpus.videos()) {
    if (!is_english(video.language_tag)) continue;
    VideoDisclosureResult r;
    r.video_id = video.video_id;
    std::map<std::string, bool> desc_affiliate;  // normalized URL -> affiliate
    for (const auto idx : corpus.crawls_of(video.video_id)) {
      const auto& c = corpus.crawls()[idx];
      const auto it = verdict_of.find(c.link_id);
      const bool aff = it != verdict_of.end() && it->second->affiliate();
      if (c.origin_location == OriginLocation::ShoppingShelf) {
        r.shelf_label = r.shelf_label || aff;
      } else {
        const auto key = normalize_url(c.original_url).value_or(c.original_url);
        auto& slot = desc_affiliate[key];
        slot = slot || aff;
      }
    }
    DescriptionInput in;
    in.description = video.description_text;
    for (const auto& link : extract_hyperlinks(video.description_text)) {
      const auto key = normalize_url(link.url).value_or(link.url);
      const auto it = desc_affiliate.find(key);
      in.links.push_back({link.url, link.offset, it != desc_affiliate.end() && it->second});
    }
    inputs.push_back(std::move(in));
    results.push_back(std::move(r));
  }

  std::vector<std::vector<DisclosureSegment>> segments;
  try {
    segments = detect_disclosures_batch(inputs, classifier);
  } catch (const std::exception& e) {
    throw PipelineError("disclose", classifier.id(), e.what());
  }
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& r = results[i];
    r.segments = std::move(segments[i]);
    r.video = aggregate_video(r.segments);
    if (r.shelf_label) {
      // The platform's own label names both the compensation and the product.
      r.video.compensation = Compensation::Clear;
      r.video.relationship = Relationship::Explicit;
    }
  }
  return results;
}

std::string disclosures_jsonl(std::span<const VideoDisclosureResult> results) {
  std::string out;
  for (const auto& r : results) {
    ordered_json j;
    j["video_id"] = r.video_id;
    j["shelf_label"] = r.shelf_label;
    j["compensation"] = r.video.compensation ? json(std::string(to_string(*r.video.compensation))) : json(nullptr);
    j["relationship"] = r.video.relationship ? json(std::string(to_string(*r.video.relationship))) : json(nullptr);
    ordered_json segs = ordered_json::array();
    for (const auto& s : r.segments) {
      ordered_json sj;
      sj["begin"] = s.begin;
      sj["end"] = s.end;
      sj["sentences"] = s.sentence_indexes;
      sj["text"] = s.text;
      sj["compensation"] = to_string(s.compensation);
      sj["relationship"] = to_string(s.relationship);
      sj["vacuous_relationship"] = s.vacuous_relationship;
      sj["classifier"] = s.classifier_id;
      segs.push_back(std::move(sj));
    }
    j["segments"] = std::move(segs);
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

std::string partner_of(const CrawlRecord& c, const std::vector<Partner>& partners) {
  for (std::size_t h = 0; h < c.hop_count(); ++h) {
    const auto url = parse_url(c.url_at_hop(h));
    if (!url) continue;
    if (const auto* p = partner_for_host(partners, url->host)) return p->id;
  }
  const auto landing = parse_url(c.landing_url);
  return landing ? registrable_host(*landing) : std::string();
}

}  // namespace

std::vector<VideoComplianceRecord> build_records(const Corpus& corpus,
                                                 std::span<const LinkVerdict> verdicts,
                                                 std::span<const VideoDisclosureResult> disclosures,
                                                 const std::vector<Partner>& partners) {
  std::map<std::string_view, const LinkVerdict*> verdict_of;
  for (const auto& v : verdicts) verdict_of[v.link_id] = &v;
  std::vector<VideoComplianceRecord> out;
  for (const auto& d : disclosures) {
    const auto* video = corpus.find_video(d.video_id);
    if (!video) throw PipelineError("records", d.video_id, "unknown video");
    VideoComplianceRecord r;
    r.video_id = video->video_id;
    r.channel_id = video->channel_id;
    std::set<std::string> all, aff;
    const CrawlRecord* first_aff = nullptr;
    for (const auto idx : corpus.crawls_of(video->video_id)) {
      const auto& c = corpus.crawls()[idx];
      const auto key = normalize_url(c.original_url).value_or(c.original_url);
      all.insert(key);
      const auto it = verdict_of.find(c.link_id);
      if (it != verdict_of.end() && it->second->affiliate()) {
        aff.insert(key);
        if (!first_aff) first_aff = &c;
      }
    }
    r.total_link_count = all.size();
    r.affiliate_link_count = aff.size();
    r.is_affiliate_video = !aff.empty();
    r.compensation = compensation_level(d.video.compensation);
    r.relationship = relationship_level(d.video.relationship);
    r.status = map_status(r.compensation, r.relationship);
    r.category = video->category;
    r.tier = tier_of(video->subscriber_count);
    r.source = video->source_tag;
    r.period = period_of(video->upload_date);
    if (first_aff) {
      r.partner = partner_of(*first_aff, partners);
      const auto p = std::find_if(partners.begin(), partners.end(),
                                  [&](const Partner& x) { return x.id == r.partner; });
      r.has_guidance = p != partners.end() && p->guidance;
    }
    try {
      validate_record(r);
    } catch (const std::exception& e) {
      throw PipelineError("records", r.video_id, e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

// --------------------------------------------------------------- stats --

EffectPlan default_effect_plan(GroupDimension split_on) {
  EffectPlan p;
  p.split_on = split_on;
  p.name = std::string(to_string(split_on));
  if (split_on == GroupDimension::Guidance) {
    p.group_a = {"guidance"};
    p.group_b = {"no_guidance"};
  } else if (split_on == GroupDimension::Period) {
    p.group_a = {"Post2018"};
    p.group_b = {"Pre2018"};
    p.period.reset();
  } else if (split_on == GroupDimension::Source) {
    p.group_a = {"Shopping"};
    p.group_b = {"Reddit", "Random"};
  }
  return p;
}

std::string run_effect(std::span<const VideoComplianceRecord> records, const EffectPlan& plan,
                       std::uint64_t seed) {
  if (plan.group_a.empty() || plan.group_b.empty()) {
    throw StatsError("effect '" + plan.name + "': both groups need at least one value");
  }
  const auto in = [](const std::vector<std::string>& vs, const std::string& v) {
    return std::find(vs.begin(), vs.end(), v) != vs.end();
  };
  std::vector<VideoComplianceRecord> pool;
  for (const auto& r : records) {
    if (!r.is_affiliate_video) continue;
    if (plan.period && r.period != *plan.period) continue;
    const auto v = dimension_value(r, plan.split_on);
    if (in(plan.group_a, v) || in(plan.group_b, v)) pool.push_back(r);
  }

  ordered_json j;
  j["name"] = plan.name;
  j["split_on"] = to_string(plan.split_on);
  j["group_a"] = plan.group_a;
  j["group_b"] = plan.group_b;
  j["period"] = plan.period ? json(std::string(to_string(*plan.period))) : json(nullptr);
  j["seed"] = seed;
  j["n_boot"] = plan.n_boot;
  j["interval_method"] = "percentile";

  std::vector<VideoComplianceRecord> sampled = pool;
  ordered_json strata = ordered_json::array();
  if (!plan.strata.empty()) {
    std::vector<std::string> dims;
    for (const auto d : plan.strata) dims.emplace_back(to_string(d));
    j["strata_dimensions"] = dims;
    StratifiedSampleSpec spec;
    spec.strata = plan.strata;
    spec.seed = derive_seed(seed, kStreamEffectSample, 0);
    spec.quota = plan.quota;
    if (spec.quota == 0) {
      std::map<std::vector<std::string>, std::size_t> sizes;
      for (const auto& r : pool) {
        std::vector<std::string> key;
        for (const auto d : plan.strata) key.push_back(dimension_value(r, d));
        ++sizes[key];
      }
      if (sizes.empty()) throw StatsError("effect '" + plan.name + "': no affiliate records");
      spec.quota = std::min_element(sizes.begin(), sizes.end(), [](const auto& a, const auto& b) {
                     return a.second < b.second;
                   })->second;
    }
    j["quota"] = spec.quota;
    const auto s = stratified_sample(pool, spec);
    sampled = s.records;
    for (const auto& st : s.strata) {
      ordered_json sj;
      sj["key"] = st.key;
      sj["available"] = st.available;
      sj["drawn"] = st.drawn;
      strata.push_back(std::move(sj));
    }
    j["dropped_strata"] = s.dropped;
  }
  j["strata"] = std::move(strata);

  std::vector<VideoComplianceRecord> a, b;
  for (const auto& r : sampled) {
    const auto v = dimension_value(r, plan.split_on);
    if (in(plan.group_a, v)) a.push_back(r);
    else if (in(plan.group_b, v)) b.push_back(r);
  }
  j["n_a"] = a.size();
  j["n_b"] = b.size();
  ordered_json estimates = ordered_json::array();
  for (std::size_t m = 0; m < plan.metrics.size(); ++m) {
    const auto e = bootstrap_effect(a, b, plan.metrics[m], plan.n_boot,
                                    derive_seed(seed, kStreamEffectBoot, m));
    ordered_json ej;
    ej["metric"] = e.metric;
    ej["delta"] = e.delta;
    ej["ci_low"] = e.ci_low;
    ej["ci_high"] = e.ci_high;
    ej["significant"] = e.significant;
    ej["seed"] = e.seed;
    estimates.push_back(std::move(ej));
  }
  j["estimates"] = std::move(estimates);
  return j.dump(2);
}

std::string source_tests_json(std::span<const VideoComplianceRecord> records) {
  struct Group {
    std::size_t videos = 0, aff_videos = 0;
    std::set<std::string> channels, aff_channels;
    std::array<std::size_t, 3> status{};
    std::vector<double> nalpv, flal;
  };
  const auto collect = [&](std::initializer_list<SourceTag> sources) {
    Group g;
    for (const auto& r : records) {
      if (std::find(sources.begin(), sources.end(), r.source) == sources.end()) continue;
      ++g.videos;
      g.channels.insert(r.channel_id);
      if (!r.is_affiliate_video) continue;
      ++g.aff_videos;
      g.aff_channels.insert(r.channel_id);
      ++g.status[static_cast<std::size_t>(r.status)];
      g.nalpv.push_back(static_cast<double>(r.affiliate_link_count));
      g.flal.push_back(static_cast<double>(r.affiliate_link_count) /
                       static_cast<double>(r.total_link_count));
    }
    return g;
  };
  const auto ztest = [](std::size_t k1, std::size_t n1, std::size_t k2, std::size_t n2) {
    ordered_json j;
    j["test"] = "z";
    try {
      const auto z = ztest_proportions(k1, n1, k2, n2);
      j["a"] = 100.0 * static_cast<double>(k1) / static_cast<double>(n1);
      j["b"] = 100.0 * static_cast<double>(k2) / static_cast<double>(n2);
      j["statistic"] = z.z;
      j["p"] = z.p;
      j["degenerate"] = z.degenerate;
    } catch (const StatsError& e) {
      j["skipped"] = e.what();
    }
    return j;
  };
  const auto welch = [](const std::vector<double>& a, const std::vector<double>& b, double scale) {
    ordered_json j;
    j["test"] = "welch";
    try {
      const auto w = welch_ttest(a, b);
      const auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (const double x : v) s += x;
        return s / static_cast<double>(v.size());
      };
      j["a"] = scale * mean(a);
      j["b"] = scale * mean(b);
      j["statistic"] = w.t;
      j["df"] = w.df;
      j["p"] = w.p;
    } catch (const StatsError& e) {
      j["skipped"] = e.what();
    }
    return j;
  };

  const Group base = collect({SourceTag::Reddit, SourceTag::Random});
  ordered_json out;
  out["baseline"] = {"Reddit", "Random"};
  ordered_json comparisons = ordered_json::array();
  for (const auto src : {SourceTag::Shopping, SourceTag::Trending}) {
    const Group g = collect({src});
    ordered_json c;
    c["source"] = to_string(src);
    c["n_videos"] = g.videos;
    c["n_affiliate_videos"] = g.aff_videos;
    ordered_json m;
    m["AV"] = ztest(g.aff_videos, g.videos, base.aff_videos, base.videos);
    m["AC"] = ztest(g.aff_channels.size(), g.channels.size(), base.aff_channels.size(),
                    base.channels.size());
    m["NALPV"] = welch(g.nalpv, base.nalpv, 1.0);
    m["FLAL"] = welch(g.flal, base.flal, 100.0);
    for (const auto s : {ComplianceStatus::CC, ComplianceStatus::PC, ComplianceStatus::NC}) {
      const auto i = static_cast<std::size_t>(s);
      m[std::string(to_string(s))] = ztest(g.status[i], g.aff_videos, base.status[i], base.aff_videos);
    }
    c["metrics"] = std::move(m);
    comparisons.push_back(std::move(c));
  }
  out["comparisons"] = std::move(comparisons);
  return out.dump(2);
}

// -------------------------------------------------------------- config --

PipelineConfig default_pipeline_config() {
  PipelineConfig c;
  c.reports = {{},
               {GroupDimension::Category},
               {GroupDimension::Tier},
               {GroupDimension::Source},
               {GroupDimension::Period},
               {GroupDimension::Guidance}};
  EffectPlan guidance = default_effect_plan(GroupDimension::Guidance);
  guidance.strata = {GroupDimension::Guidance};
  EffectPlan shopping = default_effect_plan(GroupDimension::Source);
  shopping.name = "shopping_vs_baseline";
  c.effects = {guidance, shopping};
  return c;
}

namespace {

std::vector<std::string> string_list(const json& j) {
  if (j.is_string()) {
    std::vector<std::string> out;
    for (const auto& s : split_csv_line(j.get<std::string>())) out.push_back(s);
    return out;
  }
  return j.get<std::vector<std::string>>();
}

std::vector<GroupDimension> dimension_list(const json& j) {
  std::vector<GroupDimension> out;
  for (const auto& s : string_list(j)) {
    if (s.empty()) continue;
    const auto d = parse_group_dimension(s);
    if (!d) throw std::runtime_error("unknown dimension '" + s + "'");
    out.push_back(*d);
  }
  return out;
}

EffectPlan parse_effect(const json& j) {
  const auto split = parse_group_dimension(j.at("split_on").get<std::string>());
  if (!split) throw std::runtime_error("unknown split_on '" + j["split_on"].get<std::string>() + "'");
  EffectPlan p = default_effect_plan(*split);
  if (j.contains("name")) p.name = j["name"].get<std::string>();
  if (j.contains("group_a")) p.group_a = string_list(j["group_a"]);
  if (j.contains("group_b")) p.group_b = string_list(j["group_b"]);
  if (j.contains("metrics")) {
    p.metrics.clear();
    for (const auto& m : string_list(j["metrics"])) {
      const auto s = parse_compliance_status(m);
      if (!s) throw std::runtime_error("unknown metric '" + m + "'");
      p.metrics.push_back(*s);
    }
  }
  if (j.contains("strata")) p.strata = dimension_list(j["strata"]);
  if (j.contains("quota")) p.quota = j["quota"].get<std::size_t>();
  if (j.contains("period")) {
    if (j["period"].is_null()) {
      p.period.reset();
    } else {
      const auto per = parse_period(j["period"].get<std::string>());
      if (!per) throw std::runtime_error("unknown period");
      p.period = per;
    }
  }
  if (j.contains("n_boot")) p.n_boot = j["n_boot"].get<std::size_t>();
  if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
  return p;
}

}  // namespace

PipelineConfig parse_pipeline_config(std::string_view text) {
  PipelineConfig c = default_pipeline_config();
  try {
    const auto j = json::parse(text);
    static const std::set<std::string> known = {"seed", "classifier", "grid", "reports", "effects"};
    for (const auto& [k, v] : j.items()) {
      if (!known.contains(k)) throw std::runtime_error("unknown config field '" + k + "'");
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("classifier")) c.classifier = j["classifier"].get<std::string>();
    if (j.contains("grid")) c.grid = parse_grid(j["grid"].dump());
    if (j.contains("reports")) {
      c.reports.clear();
      for (const auto& r : j["reports"]) c.reports.push_back(dimension_list(r));
    }
    if (j.contains("effects")) {
      c.effects.clear();
      for (const auto& e : j["effects"]) c.effects.push_back(parse_effect(e));
    }
  } catch (const json::exception& e) {
    throw PipelineError("config", "", e.what());
  } catch (const std::runtime_error& e) {
    throw PipelineError("config", "", e.what());
  }
  return c;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  return parse_pipeline_config(read_file(path, "config"));
}

// --------------------------------------------------------------- truth --

TruthComparison compare_with_truth(const Truth& truth, std::span<const LinkVerdict> verdicts,
                                   std::span<const VideoComplianceRecord> records) {
  TruthComparison c;
  std::vector<bool> t, p;
  for (const auto& v : verdicts) {
    const auto it = truth.links.find(v.link_id);
    if (it == truth.links.end()) continue;
    t.push_back(it->second.affiliate);
    p.push_back(v.affiliate());
  }
  c.links = binary_metrics(t, p);
  std::map<std::string_view, const VideoComplianceRecord*> by_video;
  for (const auto& r : records) by_video[r.video_id] = &r;
  for (const auto& [id, tv] : truth.videos) {
    if (!tv.english || !tv.record.is_affiliate_video) continue;
    const auto it = by_video.find(id);
    if (it == by_video.end()) continue;
    ++c.videos;
    const auto ti = static_cast<std::size_t>(tv.record.status);
    const auto pi = static_cast<std::size_t>(it->second->status);
    ++c.status_confusion[ti][pi];
    if (ti == pi) ++c.status_matches;
  }
  c.status_accuracy = c.videos ? static_cast<double>(c.status_matches) / static_cast<double>(c.videos) : 0.0;
  return c;
}

std::string truth_comparison_json(const TruthComparison& c) {
  ordered_json j;
  j["link_detection"] = metrics_json(c.links);
  j["affiliate_videos_scored"] = c.videos;
  j["status_matches"] = c.status_matches;
  j["status_accuracy"] = c.status_accuracy;
  ordered_json conf;
  for (std::size_t ti = 0; ti < 3; ++ti) {
    ordered_json row;
    for (std::size_t pi = 0; pi < 3; ++pi) {
      row[std::string(to_string(static_cast<ComplianceStatus>(pi)))] = c.status_confusion[ti][pi];
    }
    conf[std::string(to_string(static_cast<ComplianceStatus>(ti)))] = std::move(row);
  }
  j["status_confusion"] = std::move(conf);
  return j.dump(2);
}

// ---------------------------------------------------------------- run --

namespace {

class Bundle {
 public:
  explicit Bundle(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw PipelineError("write", name, "cannot write " + (dir_ / name).string());
    out << content;
    if (!out) throw PipelineError("write", name, "write failed");
    files_[name] = {sha256_hex(content), content.size()};
  }
  const std::string& sha(const std::string& name) const { return files_.at(name).first; }
  ordered_json listing() const {
    ordered_json arr = ordered_json::array();
    for (const auto& [name, info] : files_) {
      ordered_json f;
      f["name"] = name;
      f["sha256"] = info.first;
      f["bytes"] = info.second;
      arr.push_back(std::move(f));
    }
    return arr;
  }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [name, info] : files_) out.push_back(name);
    return out;
  }

 private:
  fs::path dir_;
  std::map<std::string, std::pair<std::string, std::size_t>> files_;
};

std::string report_name(std::span<const GroupDimension> dims) {
  if (dims.empty()) return "overall";
  std::string s;
  for (const auto d : dims) {
    if (!s.empty()) s += '_';
    s += to_string(d);
  }
  return s;
}

ordered_json input_entry(const std::optional<std::string>& path, const std::string& stage) {
  if (!path) return nullptr;
  ordered_json j;
  j["name"] = basename_of(*path);
  try {
    j["sha256"] = sha256_file(*path);
  } catch (const std::exception& e) {
    throw PipelineError(stage, basename_of(*path), e.what());
  }
  return j;
}

}  // namespace

PipelineSummary run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config) {
  std::error_code ec;
  fs::create_directories(inputs.out_dir, ec);
  if (ec) throw PipelineError("write", inputs.out_dir, ec.message());
  Bundle bundle(inputs.out_dir);
  PipelineSummary summary;

  const std::uint64_t split_seed = derive_seed(config.seed, kStreamRunSeeds, 0);
  const std::uint64_t train_seed = derive_seed(config.seed, kStreamRunSeeds, 1);

  // ingest
  Corpus corpus;
  try {
    IngestOptions opt;
    opt.strict = true;
    corpus = ingest_corpus(inputs.corpus_path, opt).corpus;
  } catch (const IngestError& e) {
    const auto line = e.violation() ? "line " + std::to_string(e.violation()->line) : basename_of(inputs.corpus_path);
    throw PipelineError("ingest", line, e.what());
  }
  summary.videos = corpus.videos().size();
  summary.links = corpus.crawls().size();
  bundle.write("dataset_summary.txt", summary_table(summarize_corpus(corpus)));

  // label
  std::string registry_text;
  PatternRegistry registry;
  try {
    if (inputs.registry_path) {
      registry_text = read_file(*inputs.registry_path, "label");
      registry = parse_registry(registry_text);
    } else {
      registry_text = std::string(default_registry_text());
      registry = default_registry();
    }
  } catch (const RegistryError& e) {
    throw PipelineError("label", e.rule_id(), e.what());
  }
  const auto phase1 = label_corpus(corpus, registry);
  {
    std::string out;
    for (const auto& c : corpus.crawls()) {
      const auto& l = phase1.by_link.at(c.link_id);
      ordered_json j;
      j["link_id"] = c.link_id;
      j["label"] = to_string(l.label);
      j["rule_id"] = l.rule_id;
      if (!l.diagnostic.empty()) j["diagnostic"] = l.diagnostic;
      out += j.dump();
      out += '\n';
    }
    bundle.write("labels.jsonl", out);
  }

  // graph + features
  const auto features = corpus_features(corpus);
  bundle.write("features.csv", features_csv(features));

  // train (or load) the forest
  std::optional<ForestModel> model;
  if (inputs.model_path) {
    try {
      model = load_model(*inputs.model_path);
    } catch (const std::exception& e) {
      throw PipelineError("classify", basename_of(*inputs.model_path), e.what());
    }
  } else if (inputs.labels_path && !corpus.crawls().empty()) {
    const auto labels = load_link_labels(*inputs.labels_path);
    std::vector<LabeledFeatures> samples;
    std::set<std::string> labeled;
    for (const auto& fv : features) {
      const auto it = labels.find(fv.link_id);
      if (it == labels.end()) continue;
      samples.push_back({fv, it->second});
      labeled.insert(fv.link_id);
    }
    std::vector<LinkDomain> domains;
    for (auto& d : link_domains(corpus)) {
      if (labeled.contains(d.link_id)) domains.push_back(std::move(d));
    }
    try {
      const auto plan = make_split(domains, split_seed);
      const std::set<std::string> train_ids(plan.train_test_ids.begin(), plan.train_test_ids.end());
      std::vector<LabeledFeatures> train;
      for (const auto& s : samples) {
        if (train_ids.contains(s.features.link_id)) train.push_back(s);
      }
      auto result = train_forest(train, config.grid, train_seed);
      const auto eval = evaluate(result.model, plan, samples, phase1.by_link);
      bundle.write("split.json", split_plan_json(plan));
      bundle.write("cv_report.json", cv_report_json(result.cv));
      bundle.write("evaluation.json", evaluation_json(eval));
      model = std::move(result.model);
    } catch (const std::exception& e) {
      throw PipelineError("train", basename_of(*inputs.labels_path), e.what());
    }
  }
  if (model) bundle.write("model.json", serialize_model(*model));

  // classify
  const auto verdicts = classify_links(corpus, phase1, features, model ? &*model : nullptr, registry);
  bundle.write("verdicts.jsonl", verdicts_jsonl(verdicts));

  // disclose
  std::unique_ptr<DisclosureClassifier> classifier;
  try {
    classifier = make_classifier(config.classifier);
  } catch (const std::exception& e) {
    throw PipelineError("disclose", config.classifier, e.what());
  }
  const auto disclosures = analyze_disclosures(corpus, verdicts, *classifier);
  bundle.write("disclosures.jsonl", disclosures_jsonl(disclosures));

  // records + metrics
  const auto records = build_records(corpus, verdicts, disclosures, default_partners());
  summary.records = records.size();
  {
    std::ostringstream out;
    write_records(out, records);
    bundle.write("records.jsonl", out.str());
  }
  for (const auto& dims : config.reports) {
    std::vector<MetricReport> reports;
    if (!records.empty()) reports = compute_metrics(records, dims);
    const auto name = "report_" + report_name(dims);
    bundle.write(name + ".csv", metrics_csv(reports, dims));
    bundle.write(name + ".txt", metrics_table(reports, dims));
  }

  // stats
  ordered_json effect_seeds;
  {
    ordered_json effects = ordered_json::array();
    for (std::size_t i = 0; i < config.effects.size(); ++i) {
      const auto& plan = config.effects[i];
      const auto seed = plan.seed.value_or(derive_seed(config.seed, kStreamRunSeeds, 2 + i));
      effect_seeds[plan.name] = seed;
      try {
        effects.push_back(ordered_json::parse(run_effect(records, plan, seed)));
      } catch (const StatsError& e) {
        // Too little data for this comparison is a result, not a failure.
        ordered_json skipped;
        skipped["name"] = plan.name;
        skipped["seed"] = seed;
        skipped["skipped"] = e.what();
        effects.push_back(std::move(skipped));
      }
    }
    bundle.write("effects.json", effects.dump(2));
    bundle.write("source_tests.json", source_tests_json(records));
  }

  // truth
  if (inputs.truth_path) {
    Truth truth;
    try {
      truth = load_truth(*inputs.truth_path);
    } catch (const std::exception& e) {
      throw PipelineError("truth", basename_of(*inputs.truth_path), e.what());
    }
    bundle.write("truth_comparison.json",
                 truth_comparison_json(compare_with_truth(truth, verdicts, records)));
  }

  // manifest
  ordered_json m;
  m["schema_version"] = kManifestSchemaVersion;
  m["tool_version"] = kToolVersion;
  m["crawl_schema_version"] = kCrawlSchemaVersion;
  m["feature_schema_version"] = kFeatureSchemaVersion;
  ordered_json in;
  in["corpus"] = input_entry(inputs.corpus_path, "ingest");
  in["config"] = input_entry(inputs.config_path, "config");
  in["labels"] = input_entry(inputs.labels_path, "labels");
  in["truth"] = input_entry(inputs.truth_path, "truth");
  in["model"] = input_entry(inputs.model_path, "classify");
  m["inputs"] = std::move(in);
  m["registry"] = {{"name", inputs.registry_path ? basename_of(*inputs.registry_path) : "bundled"},
                   {"sha256", sha256_hex(registry_text)},
                   {"rules", registry.size()}};
  m["model_sha256"] = model ? json(bundle.sha("model.json")) : json(nullptr);
  m["classifier"] = classifier->id();
  ordered_json seeds;
  seeds["run"] = config.seed;
  seeds["split"] = split_seed;
  seeds["train"] = model ? json(model->train_seed) : json(nullptr);
  seeds["effects"] = effect_seeds.is_null() ? ordered_json::object() : effect_seeds;
  m["seeds"] = std::move(seeds);
  m["counts"] = {{"videos", summary.videos},
                 {"links", summary.links},
                 {"records", summary.records},
                 {"known_affiliate", phase1.known_affiliate},
                 {"known_non_affiliate", phase1.known_non_affiliate},
                 {"phase1_unknown", phase1.unknown}};
  m["artifacts"] = bundle.listing();
  summary.artifacts = bundle.names();
  const auto manifest = m.dump(2) + "\n";
  bundle.write("manifest.json", manifest);
  summary.artifacts.push_back("manifest.json");
  summary.manifest_sha256 = bundle.sha("manifest.json");
  return summary;
}

}  // namespace affaudit
