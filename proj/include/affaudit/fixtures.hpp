#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "affaudit/compliance.hpp"
#include "affaudit/crawl_model.hpp"

namespace affaudit {

class FixtureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An affiliate program as seen from the outside: the hosts its links pass
/// through, the merchants they land on, and the decoration key that carries
/// the click or associate identifier.
struct Partner {
  std::string id;
  std::string name;
  std::string style;  // "amazon" or "network"
  std::vector<std::string> trackers;
  std::vector<std::string> merchants;
  std::string id_key;
  bool guidance = false;
  double weight = 0.0;
};

std::vector<Partner> parse_partners(std::string_view json_text);
const std::vector<Partner>& default_partners();

/// Partner whose tracker or merchant hosts include `host` (exact, or with a
/// leading "www." removed on either side).
const Partner* partner_for_host(const std::vector<Partner>& partners, std::string_view host);

/// Cells of the compensation x relationship grid that a disclosure script
/// targets. The three "ExplicitGrouped" rows become Explicit or Grouped
/// depending on the layout the generator picks for the video.
enum class ScriptRow {
  ClearExplicitGrouped,
  ClearMixed,
  AmbiguousExplicitGrouped,
  AmbiguousMixed,
  AbsentExplicitGrouped,
  AbsentMixed,
  AbsentAbsent,
};
inline constexpr std::size_t kScriptRowCount = 7;
using RowWeights = std::array<double, kScriptRowCount>;

std::string_view to_string(ScriptRow r);
std::optional<ScriptRow> parse_script_row(std::string_view s);

/// Largest-remainder apportionment of `n` items over `weights` (which must
/// sum to 1). Ties in the fractional part go to the lower index.
std::array<std::size_t, kScriptRowCount> allocate_rows(const RowWeights& weights, std::size_t n);

struct GeneratorSpec {
  std::uint64_t seed = 1;
  std::size_t n_videos = 0;
  std::size_t channels = 0;  // 0 picks n_videos / 3
  double affiliate_video_rate = 0.0;
  double english_rate = 1.0;
  double pre2018_rate = 0.0;
  double shelf_rate = 0.0;         // CC-row Shopping videos that disclose only through the shelf
  double unresolvable_rate = 0.0;  // non-affiliate links that are dead shorteners
  RowWeights row_weights{};
  std::map<SourceTag, RowWeights> row_weights_by_source;  // takes precedence over guidance
  std::optional<RowWeights> row_weights_guidance;         // videos whose partner publishes guidance
  std::array<double, kCategoryCount> category_weights{};
  std::array<double, 3> tier_weights{};
  std::array<double, 4> source_weights{};
  std::vector<Partner> partners;
};

/// Bundled defaults (a mid-sized demo corpus).
GeneratorSpec default_generator_spec();
/// Fields present in `json_text` override the defaults. Validates the result.
GeneratorSpec parse_generator_spec(std::string_view json_text);
GeneratorSpec load_generator_spec(const std::string& path);
/// Throws FixtureError for rates outside [0, 1], weights that are negative
/// or do not sum to 1 ("infeasible distribution"), or an empty partner list.
void validate_spec(const GeneratorSpec& spec);

struct TruthLink {
  std::string link_id;
  std::string video_id;
  bool affiliate = false;
  std::string kind;  // how the link was built, e.g. "amazon_tag", "social"

  bool operator==(const TruthLink&) const = default;
};

struct TruthVideo {
  VideoComplianceRecord record;
  bool english = true;
  std::optional<ScriptRow> row;  // affiliate videos only
  bool shelf_only = false;

  bool operator==(const TruthVideo&) const = default;
};

struct GeneratedCorpus {
  std::vector<VideoMeta> videos;
  std::vector<CrawlRecord> crawls;
  std::vector<TruthLink> links;
  std::vector<TruthVideo> truth;
};

/// Builds a corpus whose affiliate links carry an identifier from a storage
/// write into a later hop's decoration and land on a third-party merchant,
/// while non-affiliate links never do. Affiliate videos receive disclosure
/// scripts so that script rows follow the configured weights exactly
/// (largest remainder within each weight group). Deterministic for a given
/// GeneratorSpec.
GeneratedCorpus generate_corpus(const GeneratorSpec& spec);

/// Independent check of the ground truth from the crawl alone: some stored
/// value (at least 4 bytes, or an exact match) reappears in a decoration on
/// a later hop. Does not consult any generator state.
bool has_identifier_flow(const CrawlRecord& record);

/// Link ids whose truth label disagrees with has_identifier_flow.
std::vector<std::string> validate_truth(const GeneratedCorpus& g);

struct Truth {
  std::map<std::string, TruthLink> links;   // by link_id
  std::map<std::string, TruthVideo> videos; // by video_id
};

void write_truth(std::ostream& out, const GeneratedCorpus& g);
Truth read_truth(std::istream& in);
Truth load_truth(const std::string& path);

}  // namespace affaudit
