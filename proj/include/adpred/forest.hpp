#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adpred/encoders.hpp"

namespace adpred {

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t min_samples_leaf = 1;
  std::size_t max_depth = 0;           // 0 = unlimited
  std::size_t features_per_split = 0;  // 0 = round(sqrt(column count))
  std::uint64_t seed = 0;
};

// left < 0 marks a leaf; value is then the positive-class fraction of its
// training sample.  Children always carry larger indices than their parent
// (nodes are stored in preorder).
struct TreeNode {
  std::size_t feature = 0;
  double threshold = 0.0;
  std::int64_t left = -1;
  std::int64_t right = -1;
  double value = 0.0;
  bool is_leaf() const { return left < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;
};

struct ForestModel {
  ForestConfig config;
  std::size_t n_cols = 0;
  std::vector<Tree> trees;
};

// Trains one tree per bootstrap sample (n draws with replacement); each node
// splits on the best Gini-impurity decrease over a random subset of columns,
// with thresholds at midpoints between distinct observed values.  A node
// becomes a leaf when it is pure, the depth limit is reached, or no split
// leaves both children with at least min_samples_leaf rows.
//
// Tree t consumes the dedicated stream std::mt19937_64(mix64(cfg.seed, t)):
// first the n bootstrap draws via bounded(), then per-node column draws in
// preorder.  Training is therefore deterministic for a given seed regardless
// of the thread count.
//
// Throws std::domain_error on invalid config, std::runtime_error on bad data
// ("degenerate labels" when y is single-class; labels must be 0/1 and at
// least 2 rows long, matching x).
ForestModel fit_forest(const EncodedMatrix& x, const std::vector<std::int32_t>& y,
                       const ForestConfig& cfg, std::size_t threads = 1);

// Mean over trees of the reached leaf fractions, one score in [0,1] per row.
// Throws std::runtime_error on column-count mismatch.
std::vector<double> predict_proba(const ForestModel& m, const EncodedMatrix& x,
                                  std::size_t threads = 1);

// score >= threshold -> 1
std::vector<std::int32_t> predict_label(const ForestModel& m, const EncodedMatrix& x,
                                        double threshold = 0.5, std::size_t threads = 1);

// UTF-8 text persistence (config, then per-tree preorder node lists); floats
// as hexfloats, so load(save(m)) reproduces the model bit-exactly.  Malformed
// input throws std::runtime_error.
std::string forest_to_text(const ForestModel& m);
ForestModel forest_from_text(const std::string& text);

}  // namespace adpred
