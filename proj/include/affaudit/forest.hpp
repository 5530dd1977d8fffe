#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "affaudit/features.hpp"

namespace affaudit {

class ForestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabeledFeatures {
  FeatureVector features;
  bool affiliate = false;
};

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 0;         // 0 = unlimited
  int min_samples_leaf = 1;
  int max_features = 0;      // features tried per split; 0 = floor(sqrt(kFeatureCount))

  bool operator==(const ForestConfig&) const = default;
};

/// Axis-aligned binary tree. Internal nodes send x[feature] <= threshold to
/// `left`; leaves (feature == -1) carry the tree's vote.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  bool affiliate = false;

  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  bool vote(std::span<const double, kFeatureCount> x) const;
  bool operator==(const DecisionTree&) const = default;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  ForestConfig config;
  int feature_schema_version = kFeatureSchemaVersion;
  std::uint64_t train_seed = 0;

  bool operator==(const ForestModel&) const = default;
};

struct Prediction {
  bool affiliate = false;
  double score = 0.0;  // fraction of trees voting Affiliate
};

/// Affiliate iff at least half the trees vote Affiliate. Throws ForestError
/// on schema mismatch or an empty forest.
Prediction predict(const ForestModel& model, const FeatureVector& fv);

/// Seed of tree `index`: derive_seed(train_seed, 1, index).
std::uint64_t tree_seed(std::uint64_t train_seed, std::size_t index);

/// Trains one forest on exactly the given samples (bootstrap per tree,
/// Gini splits, random feature subsets). No rebalancing.
ForestModel fit_forest(std::span<const LabeledFeatures> samples, const ForestConfig& config,
                       std::uint64_t seed);

/// Drops majority-class samples at random until both classes are equal.
std::vector<LabeledFeatures> undersample(std::span<const LabeledFeatures> samples,
                                         std::uint64_t seed);

struct GridSpec {
  std::vector<int> n_trees{50, 100, 200};
  std::vector<int> max_depth{4, 8, 16, 0};
  std::vector<int> min_samples_leaf{1, 5};
  int folds = 5;

  /// Candidates ordered smallest model first: fewer trees, then shallower,
  /// then larger leaves.
  std::vector<ForestConfig> candidates() const;
};

GridSpec parse_grid(std::string_view json);

/// Affiliate is the positive class. With no positives and no predicted
/// positives all three scores are 1.
struct BinaryMetrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

BinaryMetrics binary_metrics(const std::vector<bool>& truth, const std::vector<bool>& predicted);

struct ConfigReport {
  ForestConfig config;
  std::vector<BinaryMetrics> folds;
  double mean_f1 = 0.0;
};

struct CvReport {
  std::vector<ConfigReport> configs;
  std::size_t best = 0;
};

struct TrainResult {
  ForestModel model;
  CvReport cv;
};

/// Stratified k-fold grid search on undersampled folds, then a final fit of
/// the best configuration on the undersampled full set. The earliest
/// candidate with the highest mean F1 wins, so ties go to the smaller model.
TrainResult train_forest(std::span<const LabeledFeatures> samples, const GridSpec& grid,
                         std::uint64_t seed);

std::string serialize_model(const ForestModel& model);
ForestModel parse_model(std::string_view text);
void save_model(const ForestModel& model, const std::string& path);
ForestModel load_model(const std::string& path);

std::string cv_report_json(const CvReport& report);

}  // namespace affaudit
