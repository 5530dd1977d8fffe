#include "affaudit/split.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "affaudit/rng.hpp"
#include "affaudit/url.hpp"

namespace affaudit {

namespace {

constexpr std::uint64_t kStreamDomains = 11;
constexpr std::uint64_t kStreamLinks = 12;
constexpr std::size_t kMinDomains = 10;

}  // namespace

std::vector<LinkDomain> link_domains(const Corpus& corpus) {
  std::vector<LinkDomain> out;
  out.reserve(corpus.crawls().size());
  for (const auto& c : corpus.crawls()) {
    const auto url = parse_url(c.landing_url);
    out.push_back({c.link_id, url ? registrable_host(*url) : c.landing_url});
  }
  return out;
}

SplitPlan make_split(std::span<const LinkDomain> links, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_domain;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (!ids.insert(links[i].link_id).second) {
      throw SplitError("duplicate link_id " + links[i].link_id);
    }
    by_domain[links[i].domain].push_back(i);
  }
  if (by_domain.size() < kMinDomains) {
    throw SplitError("need at least " + std::to_string(kMinDomains) +
                     " distinct landing domains, got " + std::to_string(by_domain.size()));
  }

  const std::size_t total = links.size();
  const auto lower = static_cast<std::size_t>(std::ceil(0.20 * static_cast<double>(total)));
  const auto upper = static_cast<std::size_t>(std::floor(0.25 * static_cast<double>(total)));

  std::vector<std::string> domains;
  for (const auto& [d, _] : by_domain) domains.push_back(d);
  SplitMix64 domain_rng(derive_seed(seed, kStreamDomains, 0));
  shuffle(std::span<std::string>(domains), domain_rng);

  std::set<std::string> unseen;
  std::size_t covered = 0;
  for (const auto& d : domains) {
    if (covered >= lower) break;
    const auto n = by_domain[d].size();
    if (covered + n <= upper) {
      unseen.insert(d);
      covered += n;
    }
  }
  if (covered < lower) {
    std::vector<std::string> rest;
    for (const auto& d : domains) {
      if (!unseen.count(d)) rest.push_back(d);
    }
    std::stable_sort(rest.begin(), rest.end(), [&](const auto& a, const auto& b) {
      return by_domain[a].size() < by_domain[b].size();
    });
    for (const auto& d : rest) {
      if (covered >= lower || unseen.size() + 1 >= by_domain.size()) break;
      unseen.insert(d);
      covered += by_domain[d].size();
    }
  }
  if (unseen.empty() || unseen.size() == by_domain.size()) {
    throw SplitError("cannot form an unseen-domain holdout");
  }

  SplitPlan plan;
  plan.seed = seed;
  std::vector<std::size_t> remainder;
  for (std::size_t i = 0; i < total; ++i) {
    if (unseen.count(links[i].domain)) {
      plan.holdout_unseen_ids.push_back(links[i].link_id);
    } else {
      remainder.push_back(i);
    }
  }
  SplitMix64 link_rng(derive_seed(seed, kStreamLinks, 0));
  shuffle(std::span<std::size_t>(remainder), link_rng);

  const auto seen_quota =
      static_cast<std::size_t>(std::llround(0.25 * static_cast<double>(remainder.size())));
  std::set<std::string> anchored;
  std::vector<std::size_t> candidates;
  for (const auto i : remainder) {
    if (anchored.insert(links[i].domain).second) {
      plan.train_test_ids.push_back(links[i].link_id);
    } else {
      candidates.push_back(i);
    }
  }
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto& id = links[candidates[k]].link_id;
    (k < seen_quota ? plan.holdout_seen_ids : plan.train_test_ids).push_back(id);
  }

  std::sort(plan.train_test_ids.begin(), plan.train_test_ids.end());
  std::sort(plan.holdout_seen_ids.begin(), plan.holdout_seen_ids.end());
  std::sort(plan.holdout_unseen_ids.begin(), plan.holdout_unseen_ids.end());
  return plan;
}

EvaluationReport evaluate(const ForestModel& model, const SplitPlan& plan,
                          std::span<const LabeledFeatures> samples,
                          const std::map<std::string, UrlLabel>& phase1) {
  std::unordered_map<std::string, const LabeledFeatures*> by_id;
  for (const auto& s : samples) by_id.emplace(s.features.link_id, &s);

  const auto score = [&](const std::vector<std::string>& ids, const char* name) {
    if (ids.empty()) throw SplitError(std::string(name) + " holdout is empty");
    std::vector<bool> truth, pred, base;
    for (const auto& id : ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw SplitError("no features for " + id);
      truth.push_back(it->second->affiliate);
      pred.push_back(predict(model, it->second->features).affiliate);
      const auto p = phase1.find(id);
      base.push_back(p != phase1.end() && p->second.label == Phase1Label::KnownAffiliate);
    }
    HoldoutMetrics m;
    m.size = ids.size();
    m.model = binary_metrics(truth, pred);
    m.baseline = binary_metrics(truth, base);
    return m;
  };

  EvaluationReport r;
  r.seen = score(plan.holdout_seen_ids, "seen-domain");
  r.unseen = score(plan.holdout_unseen_ids, "unseen-domain");
  return r;
}

std::string split_plan_json(const SplitPlan& plan) {
  nlohmann::ordered_json j;
  j["seed"] = plan.seed;
  j["train_test_ids"] = plan.train_test_ids;
  j["holdout_seen_ids"] = plan.holdout_seen_ids;
  j["holdout_unseen_ids"] = plan.holdout_unseen_ids;
  return j.dump(2) + "\n";
}

namespace {

nlohmann::ordered_json metrics_json(const BinaryMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
          {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn},
          {"tn", m.tn}};
}

nlohmann::ordered_json holdout_json(const HoldoutMetrics& h) {
  return {{"size", h.size}, {"model", metrics_json(h.model)},
          {"phase1_baseline", metrics_json(h.baseline)}};
}

}  // namespace

std::string evaluation_json(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["holdout_seen"] = holdout_json(report.seen);
  j["holdout_unseen"] = holdout_json(report.unseen);
  return j.dump(2) + "\n";
}

}  // namespace affaudit
