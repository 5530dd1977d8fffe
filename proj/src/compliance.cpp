#include "affaudit/compliance.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "affaudit/detail/enum_names.hpp"
#include "affaudit/url.hpp"

namespace affaudit {

namespace {

constexpr std::array<std::string_view, 3> kCompensationLevelNames = {"Clear", "Ambiguous", "Absent"};
constexpr std::array<std::string_view, 4> kRelationshipLevelNames = {"Explicit", "Grouped",
                                                                     "MixedGroup", "Absent"};
constexpr std::array<std::string_view, 3> kStatusNames = {"CC", "PC", "NC"};
constexpr std::array<std::string_view, 3> kTierNames = {"T1", "T2", "T3"};
constexpr std::array<std::string_view, 2> kPeriodNames = {"Pre2018", "Post2018"};
constexpr std::array<std::string_view, 6> kDimensionNames = {"category", "tier",    "source",
                                                             "period",   "partner", "guidance"};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

}  // namespace

std::string_view to_string(CompensationLevel c) { return detail::enum_name(c, kCompensationLevelNames); }
std::string_view to_string(RelationshipLevel r) { return detail::enum_name(r, kRelationshipLevelNames); }
std::string_view to_string(ComplianceStatus s) { return detail::enum_name(s, kStatusNames); }
std::string_view to_string(ChannelTier t) { return detail::enum_name(t, kTierNames); }
std::string_view to_string(Period p) { return detail::enum_name(p, kPeriodNames); }
std::string_view to_string(GroupDimension d) { return detail::enum_name(d, kDimensionNames); }

std::optional<CompensationLevel> parse_compensation_level(std::string_view s) {
  return detail::enum_parse<CompensationLevel>(s, kCompensationLevelNames);
}
std::optional<RelationshipLevel> parse_relationship_level(std::string_view s) {
  return detail::enum_parse<RelationshipLevel>(s, kRelationshipLevelNames);
}
std::optional<ComplianceStatus> parse_compliance_status(std::string_view s) {
  return detail::enum_parse<ComplianceStatus>(s, kStatusNames);
}
std::optional<ChannelTier> parse_channel_tier(std::string_view s) {
  return detail::enum_parse<ChannelTier>(s, kTierNames);
}
std::optional<Period> parse_period(std::string_view s) {
  return detail::enum_parse<Period>(s, kPeriodNames);
}
std::optional<GroupDimension> parse_group_dimension(std::string_view s) {
  return detail::enum_parse<GroupDimension>(s, kDimensionNames);
}

ComplianceStatus map_status(CompensationLevel c, RelationshipLevel r) {
  if (c == CompensationLevel::Absent || r == RelationshipLevel::Absent) return ComplianceStatus::NC;
  if (c == CompensationLevel::Clear && r != RelationshipLevel::MixedGroup) return ComplianceStatus::CC;
  return ComplianceStatus::PC;
}

CompensationLevel compensation_level(std::optional<Compensation> c) {
  if (!c) return CompensationLevel::Absent;
  switch (*c) {
    case Compensation::Clear: return CompensationLevel::Clear;
    case Compensation::Ambiguous: return CompensationLevel::Ambiguous;
    case Compensation::None: return CompensationLevel::Absent;
  }
  return CompensationLevel::Absent;
}

RelationshipLevel relationship_level(std::optional<Relationship> r) {
  if (!r) return RelationshipLevel::Absent;
  switch (*r) {
    case Relationship::Explicit: return RelationshipLevel::Explicit;
    case Relationship::Grouped: return RelationshipLevel::Grouped;
    case Relationship::MixedGroup: return RelationshipLevel::MixedGroup;
  }
  return RelationshipLevel::Absent;
}

ChannelTier tier_of(std::uint64_t subscribers) {
  if (subscribers < 100'000) return ChannelTier::T1;
  if (subscribers < 1'000'000) return ChannelTier::T2;
  return ChannelTier::T3;
}

Period period_of(Date d) {
  using namespace std::chrono;
  return d < year_month_day{year{2018}, January, day{1}} ? Period::Pre2018 : Period::Post2018;
}

void validate_record(const VideoComplianceRecord& r) {
  if (r.video_id.empty()) throw ComplianceError("record with empty video_id");
  if (r.affiliate_link_count > r.total_link_count) {
    throw ComplianceError(r.video_id + ": affiliate_link_count exceeds total_link_count");
  }
  if (r.is_affiliate_video != (r.affiliate_link_count > 0)) {
    throw ComplianceError(r.video_id + ": is_affiliate_video disagrees with affiliate_link_count");
  }
  if (r.status != map_status(r.compensation, r.relationship)) {
    throw ComplianceError(r.video_id + ": status does not follow from the clarity labels");
  }
}

std::string serialize_record(const VideoComplianceRecord& r) {
  nlohmann::ordered_json j;
  j["video_id"] = r.video_id;
  j["channel_id"] = r.channel_id;
  j["is_affiliate_video"] = r.is_affiliate_video;
  j["affiliate_link_count"] = r.affiliate_link_count;
  j["total_link_count"] = r.total_link_count;
  j["compensation"] = to_string(r.compensation);
  j["relationship"] = to_string(r.relationship);
  j["status"] = to_string(r.status);
  j["category"] = to_string(r.category);
  j["tier"] = to_string(r.tier);
  j["source"] = to_string(r.source);
  j["period"] = to_string(r.period);
  j["partner"] = r.partner;
  j["has_guidance"] = r.has_guidance;
  return j.dump();
}

VideoComplianceRecord parse_record(std::string_view line) {
  VideoComplianceRecord r;
  try {
    const auto j = nlohmann::json::parse(line);
    const auto enum_field = [&](const char* key, auto parse) {
      const auto text = j.at(key).get<std::string>();
      const auto v = parse(text);
      if (!v) throw ComplianceError(std::string("unknown ") + key + " '" + text + "'");
      return *v;
    };
    r.video_id = j.at("video_id").get<std::string>();
    r.channel_id = j.at("channel_id").get<std::string>();
    r.is_affiliate_video = j.at("is_affiliate_video").get<bool>();
    r.affiliate_link_count = j.at("affiliate_link_count").get<std::size_t>();
    r.total_link_count = j.at("total_link_count").get<std::size_t>();
    r.compensation = enum_field("compensation", parse_compensation_level);
    r.relationship = enum_field("relationship", parse_relationship_level);
    r.status = enum_field("status", parse_compliance_status);
    r.category = enum_field("category", parse_category);
    r.tier = enum_field("tier", parse_channel_tier);
    r.source = enum_field("source", parse_source_tag);
    r.period = enum_field("period", parse_period);
    r.partner = j.value("partner", "");
    r.has_guidance = j.value("has_guidance", false);
  } catch (const nlohmann::json::exception& e) {
    throw ComplianceError(std::string("bad record: ") + e.what());
  }
  validate_record(r);
  return r;
}

void write_records(std::ostream& out, std::span<const VideoComplianceRecord> records) {
  for (const auto& r : records) out << serialize_record(r) << '\n';
}

std::vector<VideoComplianceRecord> read_records(std::istream& in) {
  std::vector<VideoComplianceRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_record(line));
    } catch (const ComplianceError& e) {
      throw ComplianceError("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<VideoComplianceRecord> load_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ComplianceError("cannot read " + path);
  return read_records(in);
}

std::vector<GroupDimension> parse_group_dimensions(std::string_view csv) {
  std::vector<GroupDimension> out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    auto comma = csv.find(',', pos);
    if (comma == std::string_view::npos) comma = csv.size();
    auto name = csv.substr(pos, comma - pos);
    while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    if (name == "source_tag") name = "source";
    if (name == "channel_tier") name = "tier";
    if (!name.empty()) {
      const auto d = parse_group_dimension(name);
      if (!d) throw ComplianceError("unknown group dimension '" + std::string(name) + "'");
      out.push_back(*d);
    }
    pos = comma + 1;
  }
  return out;
}

std::string dimension_value(const VideoComplianceRecord& r, GroupDimension d) {
  switch (d) {
    case GroupDimension::Category: return std::string(to_string(r.category));
    case GroupDimension::Tier: return std::string(to_string(r.tier));
    case GroupDimension::Source: return std::string(to_string(r.source));
    case GroupDimension::Period: return std::string(to_string(r.period));
    case GroupDimension::Partner: return r.partner;
    case GroupDimension::Guidance: return r.has_guidance ? "guidance" : "no_guidance";
  }
  return {};
}

std::vector<MetricReport> compute_metrics(std::span<const VideoComplianceRecord> records,
                                          std::span<const GroupDimension> group_by) {
  if (records.empty()) throw ComplianceError("no records to aggregate");
  struct Acc {
    std::size_t videos = 0, affiliate = 0;
    std::set<std::string> channels, affiliate_channels;
    double links = 0.0, fraction = 0.0;
    std::array<std::size_t, 3> status{};
  };
  std::map<std::vector<std::string>, Acc> groups;
  for (const auto& r : records) {
    validate_record(r);
    std::vector<std::string> key;
    for (const auto d : group_by) key.push_back(dimension_value(r, d));
    auto& a = groups[key];
    ++a.videos;
    a.channels.insert(r.channel_id);
    if (!r.is_affiliate_video) continue;
    ++a.affiliate;
    a.affiliate_channels.insert(r.channel_id);
    a.links += static_cast<double>(r.affiliate_link_count);
    a.fraction += static_cast<double>(r.affiliate_link_count) / static_cast<double>(r.total_link_count);
    ++a.status[static_cast<std::size_t>(r.status)];
  }

  std::vector<MetricReport> out;
  for (const auto& [key, a] : groups) {
    MetricReport m;
    m.key = key;
    m.n_videos = a.videos;
    m.n_channels = a.channels.size();
    m.n_affiliate_videos = a.affiliate;
    m.n_affiliate_channels = a.affiliate_channels.size();
    m.av = 100.0 * static_cast<double>(a.affiliate) / static_cast<double>(a.videos);
    m.ac = 100.0 * static_cast<double>(m.n_affiliate_channels) / static_cast<double>(m.n_channels);
    if (a.affiliate > 0) {
      const double n = static_cast<double>(a.affiliate);
      m.nalpv = a.links / n;
      m.flal = 100.0 * a.fraction / n;
      m.cc = 100.0 * static_cast<double>(a.status[0]) / n;
      m.pc = 100.0 * static_cast<double>(a.status[1]) / n;
      m.nc = 100.0 * static_cast<double>(a.status[2]) / n;
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::string metrics_csv(std::span<const MetricReport> reports,
                        std::span<const GroupDimension> group_by) {
  std::ostringstream out;
  for (const auto d : group_by) out << to_string(d) << ',';
  out << "n_videos,n_channels,n_affiliate_videos,AV,AC,NALPV,FLAL,CC,PC,NC\n";
  for (const auto& m : reports) {
    for (const auto& k : m.key) {
      if (k.find_first_of(",\"\n") != std::string::npos) {
        std::string q = "\"";
        for (const char c : k) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        out << q << "\",";
      } else {
        out << k << ',';
      }
    }
    out << m.n_videos << ',' << m.n_channels << ',' << m.n_affiliate_videos << ',' << fmt(m.av)
        << ',' << fmt(m.ac) << ',' << fmt(m.nalpv) << ',' << fmt(m.flal) << ',' << fmt(m.cc)
        << ',' << fmt(m.pc) << ',' << fmt(m.nc) << '\n';
  }
  return out.str();
}

namespace {

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()));
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      if (i) out << "  ";
      const auto& cell = rows[r][i];
      // First column left-aligned, numbers right-aligned.
      if (i == 0) {
        out << cell << std::string(width[i] - cell.size(), ' ');
      } else {
        out << std::string(width[i] - cell.size(), ' ') << cell;
      }
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (const auto w : width) total += w;
      out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  return out.str();
}

std::string fmt2(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

}  // namespace

std::string metrics_table(std::span<const MetricReport> reports,
                          std::span<const GroupDimension> group_by) {
  std::vector<std::vector<std::string>> rows;
  std::string head;
  for (const auto d : group_by) head += (head.empty() ? "" : "/") + std::string(to_string(d));
  rows.push_back({head.empty() ? "group" : head, "videos", "AV (%)", "AC (%)", "NALPV", "FLAL (%)",
                  "NC (%)", "PC (%)", "CC (%)"});
  for (const auto& m : reports) {
    std::string key;
    for (const auto& k : m.key) key += (key.empty() ? "" : "/") + k;
    rows.push_back({key.empty() ? "all" : key, std::to_string(m.n_videos), fmt2(m.av), fmt2(m.ac),
                    fmt2(m.nalpv), fmt2(m.flal), fmt2(m.nc), fmt2(m.pc), fmt2(m.cc)});
  }
  return render_table(rows);
}

std::vector<SourceSummary> summarize_corpus(const Corpus& corpus) {
  struct Acc {
    std::set<std::string> videos, links, channels;
  };
  std::map<SourceTag, Acc> by_source;
  Acc total;
  for (const auto& v : corpus.videos()) {
    auto& a = by_source[v.source_tag];
    a.videos.insert(v.video_id);
    a.channels.insert(v.channel_id);
    total.videos.insert(v.video_id);
    total.channels.insert(v.channel_id);
  }
  for (const auto& c : corpus.crawls()) {
    const auto* v = corpus.find_video(c.video_id);
    if (!v) continue;
    const auto url = normalize_url(c.original_url).value_or(c.original_url);
    by_source[v->source_tag].links.insert(url);
    total.links.insert(url);
  }
  std::vector<SourceSummary> out;
  for (const auto& [s, a] : by_source) {
    out.push_back({std::string(to_string(s)), a.videos.size(), a.links.size(), a.channels.size()});
  }
  out.push_back({"Total", total.videos.size(), total.links.size(), total.channels.size()});
  return out;
}

std::string summary_table(std::span<const SourceSummary> rows) {
  std::vector<std::vector<std::string>> t{{"source", "videos", "hyperlinks", "channels"}};
  for (const auto& r : rows) {
    t.push_back({r.source, std::to_string(r.videos), std::to_string(r.hyperlinks),
                 std::to_string(r.channels)});
  }
  return render_table(t);
}

}  // namespace affaudit
