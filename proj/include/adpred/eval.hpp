#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adpred/dataset.hpp"

namespace adpred {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t total() const { return tp + fn + fp + tn; }
};

// Positive class is label 1.  Throws on empty or mismatched inputs and on
// labels outside {0, 1}.
ConfusionMatrix confusion(const std::vector<std::int32_t>& y_true,
                          const std::vector<std::int32_t>& y_pred);

struct Metrics {
  double acc = 0.0;  // percent, in [0, 100]
  double tpr = 0.0;
  double ppv = 0.0;
  double f1 = 0.0;
};

// acc = 100 (tp+tn)/total; tpr = tp/(tp+fn) or 0 when tp+fn = 0; ppv likewise;
// f1 = 2 tp / (2 tp + fp + fn) or 0 when that denominator is 0.
Metrics metrics(const ConfusionMatrix& c);

struct PRPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

// points[0] is the conventional anchor (recall 0, precision 1, threshold
// +inf); the rest visit the distinct scores in descending order, ties
// collapsed, deciding positive at score >= threshold.  auc is the
// recall-increment-weighted sum of precisions over those points.
struct PRCurve {
  std::vector<PRPoint> points;
  double auc = 0.0;
};

// Throws std::runtime_error "undefined recall" when y_true has no positives.
PRCurve pr_curve_auc(const std::vector<std::int32_t>& y_true,
                     const std::vector<double>& scores);

// "threshold<TAB>precision<TAB>recall" per point, header included.
std::string pr_points_to_tsv(const PRCurve& curve);

struct EvalReport {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  bool failed = false;
  std::string note;  // failure reason when failed
  Metrics metrics;
  double auc_pr = 0.0;
  ConfusionMatrix confusion;
};

std::string reports_to_tsv(const std::vector<EvalReport>& reports);
std::vector<EvalReport> reports_from_tsv(const std::string& text);

// Produces metrics + PR curve for one scored split at the given threshold.
EvalReport evaluate_scores(const std::vector<std::int32_t>& y_true,
                           const std::vector<double>& scores, double threshold = 0.5);

// Row indices per fold, each row in exactly one fold, class-stratified.
// Repeat r uses the stream std::mt19937_64(mix64(seed, r)).
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<std::int32_t>& labels,
                                                       std::size_t k, std::uint64_t seed,
                                                       std::uint64_t repeat);

// Splits d into k stratified folds, repeats times, and calls
// run_fold(train, test) for each; any fitting inside run_fold sees only the
// training rows.  Folds whose training labels are single-class, and folds
// whose run_fold throws, come back as failed reports with the reason in
// note.  Reports are ordered by (repeat, fold).
using FoldRunner = std::function<EvalReport(const Dataset& train, const Dataset& test)>;
std::vector<EvalReport> cross_validate(const Dataset& d, std::size_t k, std::size_t repeats,
                                       std::uint64_t seed, const FoldRunner& run_fold);

struct WilcoxonResult {
  double w = 0.0;       // min(W+, W-)
  double p = 1.0;       // two-sided
  std::size_t n = 0;    // pairs with nonzero difference
  bool all_zero = false;
  bool exact = false;   // enumeration branch taken
};

// Paired test on a[i] - b[i].  Zero differences are dropped; ties get average
// ranks.  Exact p by enumerating all 2^n sign assignments when the effective
// n is at most exact_limit (default 25), else a normal approximation with tie
// and continuity corrections.  All differences zero -> W = 0, p = 1,
// all_zero flagged.  Throws on empty or mismatched inputs.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b,
                                    std::size_t exact_limit = 25);

}  // namespace adpred
