#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "affaudit/crawl_model.hpp"
#include "affaudit/forest.hpp"
#include "affaudit/pattern_labeler.hpp"

namespace affaudit {

class SplitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LinkDomain {
  std::string link_id;
  std::string domain;  // landing host without a leading "www."
};

/// Landing domain of every crawl, in corpus order.
std::vector<LinkDomain> link_domains(const Corpus& corpus);

struct SplitPlan {
  std::vector<std::string> train_test_ids;
  std::vector<std::string> holdout_seen_ids;
  std::vector<std::string> holdout_unseen_ids;
  std::uint64_t seed = 0;

  bool operator==(const SplitPlan&) const = default;
};

/// Whole domains are drawn in seeded order into the unseen holdout until it
/// covers at least 20% of links (never more than 25% while the greedy pass
/// can avoid it). The rest is split by link 60/20 into train and the seen
/// holdout; each remaining domain keeps at least one link in train, so every
/// seen-holdout domain also occurs in training. Id lists are sorted.
/// Throws SplitError for fewer than 10 distinct domains or duplicate ids.
SplitPlan make_split(std::span<const LinkDomain> links, std::uint64_t seed);

struct HoldoutMetrics {
  std::size_t size = 0;
  BinaryMetrics model;
  BinaryMetrics baseline;  // Affiliate iff phase 1 said KnownAffiliate
};

struct EvaluationReport {
  HoldoutMetrics seen;
  HoldoutMetrics unseen;
};

/// Scores the model and the phase-1 baseline on both holdouts. Every holdout
/// id needs a sample; ids without a phase-1 label count as Unknown.
/// Throws SplitError on an empty holdout or a missing sample.
EvaluationReport evaluate(const ForestModel& model, const SplitPlan& plan,
                          std::span<const LabeledFeatures> samples,
                          const std::map<std::string, UrlLabel>& phase1);

std::string split_plan_json(const SplitPlan& plan);
std::string evaluation_json(const EvaluationReport& report);

}  // namespace affaudit
