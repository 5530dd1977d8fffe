#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "affaudit/crawl_model.hpp"
#include "affaudit/disclosure.hpp"

namespace affaudit {

class ComplianceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CompensationLevel { Clear, Ambiguous, Absent };
enum class RelationshipLevel { Explicit, Grouped, MixedGroup, Absent };
enum class ComplianceStatus { CC, PC, NC };
enum class ChannelTier { T1, T2, T3 };  // <100K, 100K-1M, 1M+ subscribers
enum class Period { Pre2018, Post2018 };

std::string_view to_string(CompensationLevel c);
std::string_view to_string(RelationshipLevel r);
std::string_view to_string(ComplianceStatus s);
std::string_view to_string(ChannelTier t);
std::string_view to_string(Period p);
std::optional<CompensationLevel> parse_compensation_level(std::string_view s);
std::optional<RelationshipLevel> parse_relationship_level(std::string_view s);
std::optional<ComplianceStatus> parse_compliance_status(std::string_view s);
std::optional<ChannelTier> parse_channel_tier(std::string_view s);
std::optional<Period> parse_period(std::string_view s);

/// Clear + (Explicit|Grouped) is CC; any other pairing of Clear/Ambiguous
/// with a present relationship is PC; Absent on either side is NC.
ComplianceStatus map_status(CompensationLevel c, RelationshipLevel r);

/// A None compensation label means no compensation statement, so it maps to
/// Absent, as does a missing disclosure.
CompensationLevel compensation_level(std::optional<Compensation> c);
RelationshipLevel relationship_level(std::optional<Relationship> r);

ChannelTier tier_of(std::uint64_t subscriber_count);
Period period_of(Date upload_date);

struct VideoComplianceRecord {
  std::string video_id;
  std::string channel_id;
  bool is_affiliate_video = false;
  std::size_t affiliate_link_count = 0;  // unique normalized URLs
  std::size_t total_link_count = 0;
  CompensationLevel compensation = CompensationLevel::Absent;
  RelationshipLevel relationship = RelationshipLevel::Absent;
  ComplianceStatus status = ComplianceStatus::NC;
  Category category = Category::PeopleBlogs;
  ChannelTier tier = ChannelTier::T1;
  SourceTag source = SourceTag::Random;
  Period period = Period::Post2018;
  std::string partner;        // affiliate partner id, "" if none
  bool has_guidance = false;  // partner publishes disclosure guidance

  bool operator==(const VideoComplianceRecord&) const = default;
};

/// Throws ComplianceError when counts or status are inconsistent.
void validate_record(const VideoComplianceRecord& r);

std::string serialize_record(const VideoComplianceRecord& r);
VideoComplianceRecord parse_record(std::string_view json_line);
void write_records(std::ostream& out, std::span<const VideoComplianceRecord> records);
std::vector<VideoComplianceRecord> read_records(std::istream& in);
std::vector<VideoComplianceRecord> load_records(const std::string& path);

enum class GroupDimension { Category, Tier, Source, Period, Partner, Guidance };

std::string_view to_string(GroupDimension d);
std::optional<GroupDimension> parse_group_dimension(std::string_view s);
/// Comma-separated dimension names; empty text gives no grouping.
std::vector<GroupDimension> parse_group_dimensions(std::string_view csv);

std::string dimension_value(const VideoComplianceRecord& r, GroupDimension d);

struct MetricReport {
  std::vector<std::string> key;  // one value per grouping dimension
  std::size_t n_videos = 0;
  std::size_t n_channels = 0;
  std::size_t n_affiliate_videos = 0;
  std::size_t n_affiliate_channels = 0;
  double av = 0.0;  // percent
  double ac = 0.0;  // percent
  // Absent when the group has no affiliate videos.
  std::optional<double> nalpv;
  std::optional<double> flal;  // percent
  std::optional<double> cc;
  std::optional<double> pc;
  std::optional<double> nc;
};

/// One report per distinct key, ordered by key. No dimensions gives a single
/// overall group. Throws ComplianceError on empty input.
std::vector<MetricReport> compute_metrics(std::span<const VideoComplianceRecord> records,
                                          std::span<const GroupDimension> group_by);

std::string metrics_csv(std::span<const MetricReport> reports,
                        std::span<const GroupDimension> group_by);
std::string metrics_table(std::span<const MetricReport> reports,
                          std::span<const GroupDimension> group_by);

/// Per-source counts of unique videos, hyperlinks (by normalized URL) and
/// channels, plus a total row.
struct SourceSummary {
  std::string source;
  std::size_t videos = 0;
  std::size_t hyperlinks = 0;
  std::size_t channels = 0;
};

std::vector<SourceSummary> summarize_corpus(const Corpus& corpus);
std::string summary_table(std::span<const SourceSummary> rows);

}  // namespace affaudit
