#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "adpred/dataset.hpp"

namespace adpred {

struct ContingencyTable {
  // observed counts, feature levels x label levels, integers held as doubles
  std::vector<std::vector<double>> counts;
  std::vector<double> row_totals;
  std::vector<double> col_totals;
  double n = 0.0;
  double df = 0.0;  // (rows - 1) * (cols - 1) after zero-marginal pruning

  std::size_t rows() const { return counts.size(); }
  std::size_t cols() const { return counts.empty() ? 0 : counts[0].size(); }
};

enum class Selector { chi2_pvalue, p_adj, p_adj_soft, mi, mi_adj };

struct SelectorConfig {
  double alpha = 0.05;      // significance level; critical values use 1 - alpha
  std::size_t top_k = 20;   // keep at most this many features
  int numeric_bins = 10;    // equal-frequency bins for numeric features
};

struct FeatureScore {
  std::string feature;
  Selector selector = Selector::chi2_pvalue;
  double statistic = 0.0;       // chi-squared value, or MI in nats
  double df = 0.0;
  double p_value = std::numeric_limits<double>::quiet_NaN();
  double adjusted_score = std::numeric_limits<double>::quiet_NaN();
  std::size_t rank = 0;         // 1-based position in the final ordering
  bool keep = false;
  bool degenerate = false;      // could not be scored; always ranked last
  std::string note;
};

// Observed feature x label table from two categorical columns. Rows with a
// missing code on either side are excluded; levels whose marginal ends up
// zero are pruned and df is recomputed. Throws "degenerate table" when fewer
// than two feature levels or label levels remain.
ContingencyTable build_table(const Column& feature, const Column& label);

// Same pruning and bookkeeping starting from a rectangular matrix of
// observed counts (finite, non-negative). Throws "degenerate table" when
// fewer than two rows or columns survive.
ContingencyTable table_from_counts(const std::vector<std::vector<double>>& counts);

// Equal-frequency binning into at most `bins` categorical levels "b0".., in
// ascending value order. Bin edges are order statistics, so duplicated
// boundary values always land in the lower bin; missing values pass through
// as their own "__MISSING__" level.
Column bin_numeric(const Column& col, int bins);

struct Chi2Result {
  double statistic;
  double df;
  double p_value;
};
Chi2Result chi2_statistic(const ContingencyTable& t);

// (statistic - C) / C, with C the (1 - alpha) chi-squared quantile at df.
double p_adj(double statistic, double df, double alpha);

// (statistic - C) / ln(C); throws "soft penalty undefined" when C <= 1.
double p_adj_soft(double statistic, double df, double alpha);

// Plug-in mutual information of the table in nats; tiny negative rounding
// (within -1e-12) clamps to zero.
double mutual_information(const ContingencyTable& t);

struct MiAdjResult {
  double mi;     // nats
  double score;  // 2 n MI - C
  bool keep;     // score > 0
};
MiAdjResult mi_adj(const ContingencyTable& t, double alpha);

// Scores every feature against the label (numerics binned first) and orders
// the result: ascending p-value for the plain chi-squared selector,
// descending adjusted score otherwise, ties by feature name; features that
// cannot form a valid table come last with keep = false.
std::vector<FeatureScore> rank_features(const Dataset& d, Selector sel,
                                        const SelectorConfig& cfg = {});

std::string selector_name(Selector s);
Selector selector_from_name(const std::string& name);

std::string scores_to_tsv(const std::vector<FeatureScore>& scores);
// Reads the names flagged keep=true back out of a score TSV file.
std::vector<std::string> kept_features_from_tsv(const std::string& path);

}  // namespace adpred
