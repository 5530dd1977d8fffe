#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "affaudit/bootstrap.hpp"
#include "affaudit/compliance.hpp"
#include "affaudit/crawl_model.hpp"
#include "affaudit/disclosure.hpp"
#include "affaudit/features.hpp"
#include "affaudit/fixtures.hpp"
#include "affaudit/forest.hpp"
#include "affaudit/pattern_labeler.hpp"

namespace affaudit {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "1.0.0";

/// A failure inside one pipeline stage, tagged with the stage name and the
/// record (link, video or file) being processed.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string stage, std::string record_id, const std::string& message);
  const std::string& stage() const { return stage_; }
  const std::string& record_id() const { return record_id_; }

 private:
  std::string stage_;
  std::string record_id_;
};

// ------------------------------------------------------------ features --

/// CSV with a link_id column followed by the feature columns in schema
/// order. Values use round-trip precision.
std::string features_csv(std::span<const FeatureVector> features);
std::vector<FeatureVector> parse_features_csv(std::string_view text);

/// Graph and features for every crawl, in corpus order. Throws
/// PipelineError("graph", link_id, ...) for a graph that fails its checks.
std::vector<FeatureVector> corpus_features(const Corpus& corpus);

/// Link labels from any JSONL file with {"kind":"link","link_id",
/// "affiliate"} lines (a generator truth file qualifies).
std::map<std::string, bool> load_link_labels(const std::string& path);

// ------------------------------------------------------------ verdicts --

enum class VerdictKind {
  KnownAffiliate,
  KnownNonAffiliate,
  PredictedAffiliate,
  PredictedNonAffiliate,
  Unresolvable,
};
std::string_view to_string(VerdictKind k);
std::optional<VerdictKind> parse_verdict_kind(std::string_view s);

struct LinkVerdict {
  std::string link_id;
  std::string video_id;
  VerdictKind kind = VerdictKind::Unresolvable;
  std::string rule_id;         // phase-1 rule, if any
  std::optional<double> score; // forest vote share, if the forest decided

  bool affiliate() const {
    return kind == VerdictKind::KnownAffiliate || kind == VerdictKind::PredictedAffiliate;
  }
};

/// Phase 1 decides when it can; a shortened link with no recorded redirect
/// is Unresolvable; everything else goes to the forest. `model` may be null
/// only when phase 1 or the shortener rule settles every link.
std::vector<LinkVerdict> classify_links(const Corpus& corpus, const CorpusLabels& phase1,
                                        std::span<const FeatureVector> features,
                                        const ForestModel* model, const PatternRegistry& registry);

std::string verdicts_jsonl(std::span<const LinkVerdict> verdicts);
std::vector<LinkVerdict> parse_verdicts_jsonl(std::string_view text);

// ---------------------------------------------------------- disclosure --

struct VideoDisclosureResult {
  std::string video_id;
  std::vector<DisclosureSegment> segments;
  bool shelf_label = false;  // an affiliate shopping-shelf link carries the platform label
  VideoDisclosure video;
};

/// Disclosure analysis for every English video. Links in the description
/// are matched to the video's crawls by normalized URL; unmatched links
/// count as non-affiliate.
std::vector<VideoDisclosureResult> analyze_disclosures(const Corpus& corpus,
                                                       std::span<const LinkVerdict> verdicts,
                                                       DisclosureClassifier& classifier);

std::string disclosures_jsonl(std::span<const VideoDisclosureResult> results);

/// One record per analyzed video. Link counts are unique normalized
/// original URLs across description and shelf links.
std::vector<VideoComplianceRecord> build_records(const Corpus& corpus,
                                                 std::span<const LinkVerdict> verdicts,
                                                 std::span<const VideoDisclosureResult> disclosures,
                                                 const std::vector<Partner>& partners);

// --------------------------------------------------------------- stats --

struct EffectPlan {
  std::string name;
  GroupDimension split_on = GroupDimension::Guidance;
  std::vector<std::string> group_a;  // dimension values forming group A
  std::vector<std::string> group_b;
  std::vector<ComplianceStatus> metrics{ComplianceStatus::CC, ComplianceStatus::PC,
                                        ComplianceStatus::NC};
  std::vector<GroupDimension> strata;  // empty: no stratified sampling
  std::size_t quota = 0;               // 0: the smallest stratum's size
  std::optional<Period> period = Period::Post2018;
  std::size_t n_boot = 10000;
  std::optional<std::uint64_t> seed;  // default: derived from the run seed
};

/// Default groups for a split dimension: guidance vs no_guidance,
/// Post2018 vs Pre2018; other dimensions need explicit groups.
EffectPlan default_effect_plan(GroupDimension split_on);

/// Stratifies (when asked), splits and bootstraps every metric over
/// affiliate videos. Returns a JSON object with the estimates, group sizes
/// and the strata report.
std::string run_effect(std::span<const VideoComplianceRecord> records, const EffectPlan& plan,
                       std::uint64_t seed);

/// Group comparisons in the layout of a per-source significance table:
/// z-tests on AV, AC, CC, PC, NC and Welch tests on NALPV and FLAL, for
/// Shopping and Trending each against Reddit + Random.
std::string source_tests_json(std::span<const VideoComplianceRecord> records);

// ---------------------------------------------------------------- run --

struct PipelineConfig {
  std::uint64_t seed = 1;
  std::string classifier = "rules";
  GridSpec grid;
  std::vector<std::vector<GroupDimension>> reports;
  std::vector<EffectPlan> effects;
};

PipelineConfig default_pipeline_config();
PipelineConfig parse_pipeline_config(std::string_view json_text);
PipelineConfig load_pipeline_config(const std::string& path);

struct PipelineInputs {
  std::string corpus_path;
  std::string out_dir;
  std::optional<std::string> config_path;    // recorded in the manifest
  std::optional<std::string> registry_path;  // default: bundled registry
  std::optional<std::string> model_path;     // skip training
  std::optional<std::string> labels_path;    // training labels
  std::optional<std::string> truth_path;     // end-to-end scoring only
};

struct PipelineSummary {
  std::size_t videos = 0;
  std::size_t links = 0;
  std::size_t records = 0;
  std::vector<std::string> artifacts;  // file names in the run directory
  std::string manifest_sha256;
};

/// label -> graph -> features -> classify -> disclose -> metrics -> stats,
/// writing every artifact plus manifest.json into out_dir. The bundle holds
/// no timestamps or absolute paths, so identical inputs and seeds give
/// identical bytes.
PipelineSummary run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config);

// --------------------------------------------------------------- truth --

struct TruthComparison {
  BinaryMetrics links;       // verdict vs truth label, over links in both
  std::size_t videos = 0;    // English affiliate videos scored
  std::size_t status_matches = 0;
  double status_accuracy = 0.0;
  std::array<std::array<std::size_t, 3>, 3> status_confusion{};  // [truth][predicted]
};

TruthComparison compare_with_truth(const Truth& truth, std::span<const LinkVerdict> verdicts,
                                   std::span<const VideoComplianceRecord> records);
std::string truth_comparison_json(const TruthComparison& c);

}  // namespace affaudit
