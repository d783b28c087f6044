#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "adpred/dataset.hpp"

namespace adpred {

enum class NumericImpute { median, drop_row };

struct PreprocessConfig {
  double variance_epsilon = 0.0;  // numeric features with variance <= this go
  NumericImpute numeric_impute = NumericImpute::median;
  std::string categorical_missing_token = "__MISSING__";
};

struct CleaningReport {
  std::size_t duplicate_rows_removed = 0;
  std::size_t rows_dropped_missing_label = 0;
  std::size_t rows_dropped_missing_numeric = 0;
  std::map<std::string, std::size_t> imputed_median;
  std::map<std::string, std::size_t> imputed_missing_token;
  std::vector<std::pair<std::string, std::string>> dropped_columns;  // (name, reason)

  // One "action<TAB>column<TAB>count" line per entry; row-level actions use
  // "-" as the column.
  std::string to_tsv() const;
};

// Cleans a dataset: exact duplicate rows collapse to their first occurrence,
// rows with a missing label are dropped, missing cells are imputed (sentinel
// token for categoricals, per-config policy for numerics), numeric features
// with variance <= variance_epsilon and categorical features with fewer than
// two distinct levels are removed. The pass list repeats until a full pass
// changes nothing, so the operation is idempotent by construction. Throws
// when no feature columns survive.
std::pair<Dataset, CleaningReport> preprocess(const Dataset& d, const PreprocessConfig& cfg = {});

// Median of the non-missing entries (average of the middle pair for even
// counts); 0 when every entry is missing.
double median_ignoring_missing(const std::vector<double>& values);

}  // namespace adpred
