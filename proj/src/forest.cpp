#include "affaudit/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "affaudit/rng.hpp"
#include "affaudit/simd/kernels.hpp"

namespace affaudit {

namespace {

using json = nlohmann::ordered_json;

constexpr std::uint64_t kStreamTree = 1;
constexpr std::uint64_t kStreamFoldFit = 2;
constexpr std::uint64_t kStreamUndersample = 3;
constexpr std::uint64_t kStreamFolds = 4;

int default_max_features() {
  return static_cast<int>(std::floor(std::sqrt(static_cast<double>(kFeatureCount))));
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const LabeledFeatures> samples, const ForestConfig& config,
              std::uint64_t seed)
      : samples_(samples), config_(config), rng_(seed) {
    mtry_ = config.max_features > 0 ? std::min<int>(config.max_features, kFeatureCount)
                                    : default_max_features();
  }

  DecisionTree build() {
    const std::size_t n = samples_.size();
    std::vector<std::uint32_t> rows(n);
    for (auto& r : rows) r = static_cast<std::uint32_t>(uniform_below(rng_, n));
    tree_.nodes.clear();
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::uint32_t>& rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::size_t positives = 0;
    for (const auto r : rows) positives += samples_[r].affiliate;
    const std::size_t size = rows.size();

    const bool pure = positives == 0 || positives == size;
    const bool depth_ok = config_.max_depth <= 0 || depth < config_.max_depth;
    const auto leaf_min = static_cast<std::size_t>(std::max(1, config_.min_samples_leaf));
    std::optional<SplitChoice> split;
    if (!pure && depth_ok && size >= 2 * leaf_min) split = choose_split(rows, positives, leaf_min);
    if (!split) {
      tree_.nodes[id].affiliate = 2 * positives >= size;
      return id;
    }

    std::vector<std::uint32_t> left, right;
    left.reserve(size);
    right.reserve(size);
    for (const auto r : rows) {
      (value(r, split->feature) <= split->threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(left, depth + 1);
    const int rgt = grow(right, depth + 1);
    auto& node = tree_.nodes[id];
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = l;
    node.right = rgt;
    node.affiliate = 2 * positives >= size;
    return id;
  }

  double value(std::uint32_t row, int feature) const {
    return samples_[row].features.values[static_cast<std::size_t>(feature)];
  }

  std::optional<SplitChoice> choose_split(const std::vector<std::uint32_t>& rows,
                                          std::size_t positives, std::size_t leaf_min) {
    std::array<int, kFeatureCount> order{};
    std::iota(order.begin(), order.end(), 0);
    // Partial Fisher-Yates: the first mtry_ slots become the candidate set.
    for (int i = 0; i < mtry_; ++i) {
      const auto j = i + static_cast<int>(uniform_below(rng_, kFeatureCount - i));
      std::swap(order[i], order[j]);
    }
    std::sort(order.begin(), order.begin() + mtry_);
    std::sort(order.begin() + mtry_, order.end());

    auto best = best_among(rows, positives, leaf_min, {order.begin(), order.begin() + mtry_});
    if (!best) best = best_among(rows, positives, leaf_min, {order.begin() + mtry_, order.end()});
    return best;
  }

  std::optional<SplitChoice> best_among(const std::vector<std::uint32_t>& rows,
                                        std::size_t positives, std::size_t leaf_min,
                                        std::span<const int> features) {
    const std::size_t n = rows.size();
    std::optional<SplitChoice> best;
    for (const int f : features) {
      sorted_.clear();
      for (const auto r : rows) sorted_.emplace_back(value(r, f), samples_[r].affiliate);
      std::sort(sorted_.begin(), sorted_.end());
      if (sorted_.front().first == sorted_.back().first) continue;

      left_pos_.resize(n - 1);
      impurity_.resize(n - 1);
      std::int32_t acc = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        acc += sorted_[i].second;
        left_pos_[i] = acc;
      }
      simd::split_impurities(left_pos_, static_cast<std::int32_t>(positives), impurity_);

      for (std::size_t i = leaf_min - 1; i + leaf_min < n; ++i) {
        const double a = sorted_[i].first;
        const double b = sorted_[i + 1].first;
        if (!(a < b)) continue;
        if (best && !(impurity_[i] < best->impurity)) continue;
        double mid = a + (b - a) / 2.0;
        if (!(mid < b)) mid = a;
        best = SplitChoice{f, mid, impurity_[i]};
      }
    }
    return best;
  }

  std::span<const LabeledFeatures> samples_;
  ForestConfig config_;
  SplitMix64 rng_;
  int mtry_ = 1;
  DecisionTree tree_;
  std::vector<std::pair<double, bool>> sorted_;
  std::vector<std::int32_t> left_pos_;
  std::vector<double> impurity_;
};

void require_two_classes(std::span<const LabeledFeatures> samples) {
  const auto pos = std::count_if(samples.begin(), samples.end(),
                                 [](const auto& s) { return s.affiliate; });
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(samples.size())) {
    throw ForestError("training data must contain both classes");
  }
}

void require_schema(std::span<const LabeledFeatures> samples) {
  for (const auto& s : samples) {
    if (s.features.schema_version != kFeatureSchemaVersion) {
      throw ForestError("feature schema mismatch for " + s.features.link_id);
    }
  }
}

}  // namespace

bool DecisionTree::vote(std::span<const double, kFeatureCount> x) const {
  int i = 0;
  for (;;) {
    const auto& node = nodes[static_cast<std::size_t>(i)];
    if (node.feature < 0) return node.affiliate;
    i = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
}

Prediction predict(const ForestModel& model, const FeatureVector& fv) {
  if (fv.schema_version != model.feature_schema_version) {
    throw ForestError("feature schema version " + std::to_string(fv.schema_version) +
                      " does not match model version " +
                      std::to_string(model.feature_schema_version));
  }
  if (model.trees.empty()) throw ForestError("model has no trees");
  std::size_t votes = 0;
  for (const auto& t : model.trees) votes += t.vote(fv.values);
  Prediction p;
  p.score = static_cast<double>(votes) / static_cast<double>(model.trees.size());
  p.affiliate = 2 * votes >= model.trees.size();
  return p;
}

std::uint64_t tree_seed(std::uint64_t train_seed, std::size_t index) {
  return derive_seed(train_seed, kStreamTree, index);
}

ForestModel fit_forest(std::span<const LabeledFeatures> samples, const ForestConfig& config,
                       std::uint64_t seed) {
  if (samples.empty()) throw ForestError("no training samples");
  if (config.n_trees < 1) throw ForestError("n_trees must be at least 1");
  if (config.min_samples_leaf < 1) throw ForestError("min_samples_leaf must be at least 1");
  require_schema(samples);
  ForestModel model;
  model.config = config;
  model.train_seed = seed;
  model.trees.reserve(static_cast<std::size_t>(config.n_trees));
  for (int t = 0; t < config.n_trees; ++t) {
    TreeBuilder builder(samples, config, tree_seed(seed, static_cast<std::size_t>(t)));
    model.trees.push_back(builder.build());
  }
  return model;
}

std::vector<LabeledFeatures> undersample(std::span<const LabeledFeatures> samples,
                                         std::uint64_t seed) {
  require_two_classes(samples);
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < samples.size(); ++i) (samples[i].affiliate ? pos : neg).push_back(i);
  auto& major = pos.size() > neg.size() ? pos : neg;
  const auto& minor = pos.size() > neg.size() ? neg : pos;
  SplitMix64 rng(seed);
  shuffle(std::span<std::size_t>(major), rng);
  major.resize(minor.size());
  std::vector<std::size_t> keep(pos);
  keep.insert(keep.end(), neg.begin(), neg.end());
  std::sort(keep.begin(), keep.end());
  std::vector<LabeledFeatures> out;
  out.reserve(keep.size());
  for (const auto i : keep) out.push_back(samples[i]);
  return out;
}

std::vector<ForestConfig> GridSpec::candidates() const {
  if (n_trees.empty() || max_depth.empty() || min_samples_leaf.empty()) {
    throw ForestError("empty grid");
  }
  std::vector<ForestConfig> out;
  for (const int t : n_trees) {
    for (const int d : max_depth) {
      for (const int l : min_samples_leaf) out.push_back({t, d, l, 0});
    }
  }
  const auto depth_key = [](int d) { return d <= 0 ? INT32_MAX : d; };
  std::stable_sort(out.begin(), out.end(), [&](const ForestConfig& a, const ForestConfig& b) {
    if (a.n_trees != b.n_trees) return a.n_trees < b.n_trees;
    if (depth_key(a.max_depth) != depth_key(b.max_depth)) {
      return depth_key(a.max_depth) < depth_key(b.max_depth);
    }
    return a.min_samples_leaf > b.min_samples_leaf;
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

GridSpec parse_grid(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ForestError(std::string("grid: ") + e.what());
  }
  if (!j.is_object()) throw ForestError("grid: expected an object");
  GridSpec g;
  const auto read = [&](const char* key, std::vector<int>& dst) {
    if (!j.contains(key)) return;
    try {
      dst = j.at(key).get<std::vector<int>>();
    } catch (const json::exception&) {
      throw ForestError(std::string("grid: ") + key + " must be a list of integers");
    }
  };
  read("n_trees", g.n_trees);
  read("max_depth", g.max_depth);
  read("min_samples_leaf", g.min_samples_leaf);
  if (j.contains("folds")) g.folds = j.at("folds").get<int>();
  if (g.folds < 2) throw ForestError("grid: folds must be at least 2");
  (void)g.candidates();
  return g;
}

BinaryMetrics binary_metrics(const std::vector<bool>& truth, const std::vector<bool>& predicted) {
  if (truth.size() != predicted.size()) throw ForestError("metric inputs differ in length");
  BinaryMetrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i]) {
      predicted[i] ? ++m.tp : ++m.fn;
    } else {
      predicted[i] ? ++m.fp : ++m.tn;
    }
  }
  if (m.tp + m.fp + m.fn == 0) {
    m.precision = m.recall = m.f1 = 1.0;
    return m;
  }
  m.precision = m.tp + m.fp == 0 ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  m.recall = m.tp + m.fn == 0 ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  m.f1 = 2.0 * static_cast<double>(m.tp) / static_cast<double>(2 * m.tp + m.fp + m.fn);
  return m;
}

TrainResult train_forest(std::span<const LabeledFeatures> samples, const GridSpec& grid,
                         std::uint64_t seed) {
  require_schema(samples);
  require_two_classes(samples);
  const auto configs = grid.candidates();
  const auto k = static_cast<std::size_t>(grid.folds);

  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < samples.size(); ++i) (samples[i].affiliate ? pos : neg).push_back(i);
  if (pos.size() < k || neg.size() < k) {
    throw ForestError("each class needs at least one sample per fold");
  }
  SplitMix64 fold_rng(derive_seed(seed, kStreamFolds, 0));
  shuffle(std::span<std::size_t>(pos), fold_rng);
  shuffle(std::span<std::size_t>(neg), fold_rng);
  std::vector<std::size_t> fold_of(samples.size());
  for (std::size_t i = 0; i < pos.size(); ++i) fold_of[pos[i]] = i % k;
  for (std::size_t i = 0; i < neg.size(); ++i) fold_of[neg[i]] = i % k;

  struct Fold {
    std::vector<LabeledFeatures> train;
    std::vector<const LabeledFeatures*> test;
  };
  std::vector<Fold> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<LabeledFeatures> train;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (fold_of[i] == f) {
        folds[f].test.push_back(&samples[i]);
      } else {
        train.push_back(samples[i]);
      }
    }
    folds[f].train = undersample(train, derive_seed(seed, kStreamUndersample, f));
  }

  TrainResult result;
  double best_f1 = -1.0;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    ConfigReport report;
    report.config = configs[c];
    double sum = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
      const auto model = fit_forest(folds[f].train, configs[c], derive_seed(seed, kStreamFoldFit, f));
      std::vector<bool> truth, pred;
      for (const auto* s : folds[f].test) {
        truth.push_back(s->affiliate);
        pred.push_back(predict(model, s->features).affiliate);
      }
      report.folds.push_back(binary_metrics(truth, pred));
      sum += report.folds.back().f1;
    }
    report.mean_f1 = sum / static_cast<double>(k);
    if (report.mean_f1 > best_f1) {
      best_f1 = report.mean_f1;
      result.cv.best = c;
    }
    result.cv.configs.push_back(std::move(report));
  }

  const auto balanced = undersample(samples, derive_seed(seed, kStreamUndersample, k));
  result.model = fit_forest(balanced, configs[result.cv.best], seed);
  return result;
}

std::string serialize_model(const ForestModel& model) {
  json j;
  j["format"] = "affaudit-forest";
  j["feature_schema_version"] = model.feature_schema_version;
  j["train_seed"] = model.train_seed;
  j["config"] = {{"n_trees", model.config.n_trees},
                 {"max_depth", model.config.max_depth},
                 {"min_samples_leaf", model.config.min_samples_leaf},
                 {"max_features", model.config.max_features}};
  json trees = json::array();
  for (const auto& t : model.trees) {
    json nodes = json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.affiliate ? 1 : 0}));
    }
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  return j.dump() + "\n";
}

ForestModel parse_model(std::string_view text) {
  ForestModel m;
  try {
    const auto j = json::parse(text);
    if (j.value("format", "") != "affaudit-forest") throw ForestError("not a forest model");
    m.feature_schema_version = j.at("feature_schema_version").get<int>();
    m.train_seed = j.at("train_seed").get<std::uint64_t>();
    const auto& c = j.at("config");
    m.config.n_trees = c.at("n_trees").get<int>();
    m.config.max_depth = c.at("max_depth").get<int>();
    m.config.min_samples_leaf = c.at("min_samples_leaf").get<int>();
    m.config.max_features = c.value("max_features", 0);
    for (const auto& jt : j.at("trees")) {
      DecisionTree t;
      for (const auto& jn : jt) {
        TreeNode n;
        n.feature = jn.at(0).get<int>();
        n.threshold = jn.at(1).get<double>();
        n.left = jn.at(2).get<int>();
        n.right = jn.at(3).get<int>();
        n.affiliate = jn.at(4).get<int>() != 0;
        t.nodes.push_back(n);
      }
      m.trees.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw ForestError(std::string("model: ") + e.what());
  }
  if (m.feature_schema_version != kFeatureSchemaVersion) {
    throw ForestError("model feature schema version " + std::to_string(m.feature_schema_version) +
                      " is not supported");
  }
  for (const auto& t : m.trees) {
    const auto count = static_cast<int>(t.nodes.size());
    if (count == 0) throw ForestError("model: empty tree");
    for (int i = 0; i < count; ++i) {
      const auto& n = t.nodes[static_cast<std::size_t>(i)];
      if (n.feature < 0) continue;
      if (n.feature >= static_cast<int>(kFeatureCount)) throw ForestError("model: feature index out of range");
      // Children always follow their parent, which also rules out cycles.
      if (n.left <= i || n.right <= i || n.left >= count || n.right >= count) {
        throw ForestError("model: bad child index");
      }
    }
  }
  return m;
}

void save_model(const ForestModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ForestError("cannot write " + path);
  out << serialize_model(model);
  if (!out) throw ForestError("write failed: " + path);
}

ForestModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ForestError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

std::string cv_report_json(const CvReport& report) {
  json j;
  j["best"] = report.best;
  json configs = json::array();
  for (const auto& c : report.configs) {
    json folds = json::array();
    for (const auto& f : c.folds) {
      folds.push_back({{"precision", f.precision}, {"recall", f.recall}, {"f1", f.f1}});
    }
    configs.push_back({{"n_trees", c.config.n_trees},
                       {"max_depth", c.config.max_depth},
                       {"min_samples_leaf", c.config.min_samples_leaf},
                       {"mean_f1", c.mean_f1},
                       {"folds", std::move(folds)}});
  }
  j["configs"] = std::move(configs);
  return j.dump(2) + "\n";
}

}  // namespace affaudit
