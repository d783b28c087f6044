#pragma once

#include <map>
#include <string>
#include <vector>

#include "adpred/dataset.hpp"
#include "adpred/encoders.hpp"
#include "adpred/eval.hpp"
#include "adpred/forest.hpp"
#include "adpred/preprocess.hpp"
#include "adpred/selectors.hpp"

namespace adpred {

struct PipelineConfig {
  PreprocessConfig preprocess;
  bool use_selection = true;
  Selector selector = Selector::p_adj;
  SelectorConfig selection;
  std::size_t cardinality_threshold = 256;
  std::size_t hash_buckets = std::size_t{1} << 18;
  ForestConfig forest;
  double decision_threshold = 0.5;
  std::size_t threads = 1;
};

struct FittedPipeline {
  std::vector<FeatureScore> scores;  // empty when selection is off
  std::map<std::string, double> numeric_medians;  // training medians, for scoring-time imputation
  EncoderSpec encoder;
  ForestModel model;
};

// Cleans the training data, optionally ranks and filters features, fits the
// encoder and scaler state on what survives, and trains the forest.  Every
// fitted quantity derives from train_raw alone.  Throws std::runtime_error
// when selection keeps no features (beyond the errors of the stages).
FittedPipeline fit_pipeline(const Dataset& train_raw, const PipelineConfig& cfg);

// Scores raw rows with a fitted pipeline: imputes missing numerics with the
// stored training medians (missing categoricals encode as all-zero blocks),
// then transforms and averages the forest votes.  No rows are dropped or
// reordered; output[i] belongs to input row i.
std::vector<double> pipeline_scores(const FittedPipeline& fp, const Dataset& raw,
                                    std::size_t threads = 1);

// Fold driver for cross_validate: fits on train, scores test, reports the
// confusion metrics and PR area at cfg.decision_threshold.
EvalReport run_pipeline_fold(const Dataset& train, const Dataset& test,
                             const PipelineConfig& cfg);

// Single-file persistence of everything scoring needs (medians, encoder,
// forest); bit-exact round trip.  Malformed input throws std::runtime_error.
std::string model_to_text(const FittedPipeline& fp);
FittedPipeline model_from_text(const std::string& text);

}  // namespace adpred
