#include "adpred/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "adpred/rng.hpp"
#include "adpred/text.hpp"

namespace adpred {

namespace {

void check_binary(const std::vector<std::int32_t>& y, const char* who) {
  for (std::int32_t v : y)
    if (v != 0 && v != 1)
      throw std::runtime_error(std::string(who) + ": labels must be 0/1");
}

Dataset take_rows(const Dataset& d, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.n_rows = rows.size();
  out.label_index = d.label_index;
  out.columns.reserve(d.columns.size());
  for (const auto& col : d.columns) {
    Column c;
    c.schema = col.schema;
    c.levels = col.levels;
    if (col.is_numeric()) {
      c.num.reserve(rows.size());
      for (std::size_t r : rows) c.num.push_back(col.num[r]);
    } else {
      c.codes.reserve(rows.size());
      for (std::size_t r : rows) c.codes.push_back(col.codes[r]);
    }
    out.columns.push_back(std::move(c));
  }
  return out;
}

double normal_two_sided(double z) {
  // 2 P(Z <= z) for z <= 0
  return std::erfc(-z / std::sqrt(2.0));
}

}  // namespace

ConfusionMatrix confusion(const std::vector<std::int32_t>& y_true,
                          const std::vector<std::int32_t>& y_pred) {
  if (y_true.empty()) throw std::runtime_error("confusion: empty input");
  if (y_true.size() != y_pred.size())
    throw std::runtime_error("confusion: length mismatch");
  check_binary(y_true, "confusion");
  check_binary(y_pred, "confusion");
  ConfusionMatrix c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1)
      ++(y_pred[i] == 1 ? c.tp : c.fn);
    else
      ++(y_pred[i] == 1 ? c.fp : c.tn);
  }
  return c;
}

Metrics metrics(const ConfusionMatrix& c) {
  std::size_t total = c.total();
  if (total == 0) throw std::runtime_error("metrics: empty confusion matrix");
  Metrics m;
  m.acc = 100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
  m.tpr = c.tp + c.fn == 0
              ? 0.0
              : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  m.ppv = c.tp + c.fp == 0
              ? 0.0
              : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  std::size_t f1_den = 2 * c.tp + c.fp + c.fn;
  m.f1 = f1_den == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(f1_den);
  return m;
}

PRCurve pr_curve_auc(const std::vector<std::int32_t>& y_true,
                     const std::vector<double>& scores) {
  if (y_true.empty() || y_true.size() != scores.size())
    throw std::runtime_error("pr_curve_auc: bad input lengths");
  check_binary(y_true, "pr_curve_auc");
  std::size_t total_pos = 0;
  for (std::int32_t v : y_true) total_pos += v;
  if (total_pos == 0) throw std::runtime_error("undefined recall");

  std::vector<std::size_t> order(y_true.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  PRCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 1.0, 0.0});
  std::size_t tp = 0, fp = 0;
  double prev_recall = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      ++(y_true[order[i]] == 1 ? tp : fp);
      ++i;
    }
    double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    curve.points.push_back({threshold, precision, recall});
    curve.auc += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return curve;
}

std::string pr_points_to_tsv(const PRCurve& curve) {
  std::ostringstream out;
  out << "threshold\tprecision\trecall\n";
  for (const auto& p : curve.points)
    out << shortest_double(p.threshold) << "\t" << shortest_double(p.precision) << "\t"
        << shortest_double(p.recall) << "\n";
  return out.str();
}

EvalReport evaluate_scores(const std::vector<std::int32_t>& y_true,
                           const std::vector<double>& scores, double threshold) {
  std::vector<std::int32_t> pred(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] >= threshold ? 1 : 0;
  EvalReport rep;
  rep.confusion = confusion(y_true, pred);
  rep.metrics = metrics(rep.confusion);
  rep.auc_pr = pr_curve_auc(y_true, scores).auc;
  return rep;
}

std::string reports_to_tsv(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << "repeat\tfold\tacc\ttpr\tppv\tf1\tauc_pr\ttp\tfn\tfp\ttn\tstatus\n";
  for (const auto& r : reports) {
    out << r.repeat << "\t" << r.fold << "\t" << shortest_double(r.metrics.acc) << "\t"
        << shortest_double(r.metrics.tpr) << "\t" << shortest_double(r.metrics.ppv) << "\t"
        << shortest_double(r.metrics.f1) << "\t" << shortest_double(r.auc_pr) << "\t"
        << r.confusion.tp << "\t" << r.confusion.fn << "\t" << r.confusion.fp << "\t"
        << r.confusion.tn << "\t"
        << (r.failed ? "failed: " + escape_field(r.note) : std::string("ok")) << "\n";
  }
  return out.str();
}

std::vector<EvalReport> reports_from_tsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "repeat\tfold\tacc\ttpr\tppv\tf1\tauc_pr\ttp\tfn\tfp\ttn\tstatus")
    throw std::runtime_error("not a report file (bad header)");
  std::vector<EvalReport> reports;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 12)
      throw std::runtime_error("report file: malformed line " + std::to_string(line_no));
    EvalReport r;
    std::uint64_t u = 0;
    double d = 0.0;
    auto num = [&](const std::string& s) {
      if (!try_parse_double(s, d))
        throw std::runtime_error("report file: bad number on line " + std::to_string(line_no));
      return d;
    };
    auto count = [&](const std::string& s) {
      if (!try_parse_u64(s, u))
        throw std::runtime_error("report file: bad count on line " + std::to_string(line_no));
      return static_cast<std::size_t>(u);
    };
    r.repeat = count(f[0]);
    r.fold = count(f[1]);
    r.metrics.acc = num(f[2]);
    r.metrics.tpr = num(f[3]);
    r.metrics.ppv = num(f[4]);
    r.metrics.f1 = num(f[5]);
    r.auc_pr = num(f[6]);
    r.confusion.tp = count(f[7]);
    r.confusion.fn = count(f[8]);
    r.confusion.fp = count(f[9]);
    r.confusion.tn = count(f[10]);
    if (f[11] == "ok") {
      r.failed = false;
    } else if (f[11].rfind("failed: ", 0) == 0) {
      r.failed = true;
      if (!try_unescape_field(f[11].substr(8), r.note))
        throw std::runtime_error("report file: bad escape on line " + std::to_string(line_no));
    } else {
      throw std::runtime_error("report file: bad status on line " + std::to_string(line_no));
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<std::int32_t>& labels,
                                                       std::size_t k, std::uint64_t seed,
                                                       std::uint64_t repeat) {
  if (k < 2) throw std::domain_error("k out of domain (must be >= 2)");
  if (labels.size() < k) throw std::runtime_error("stratified_folds: fewer rows than folds");
  check_binary(labels, "stratified_folds");
  std::mt19937_64 g(mix64(seed, repeat));
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::int32_t cls : {1, 0}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) rows.push_back(i);
    for (std::size_t i = rows.size(); i > 1; --i)
      std::swap(rows[i - 1], rows[bounded(g, i)]);
    for (std::size_t i = 0; i < rows.size(); ++i) folds[i % k].push_back(rows[i]);
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

std::vector<EvalReport> cross_validate(const Dataset& d, std::size_t k, std::size_t repeats,
                                       std::uint64_t seed, const FoldRunner& run_fold) {
  if (repeats < 1) throw std::domain_error("repeats out of domain (must be >= 1)");
  if (!d.has_label()) throw std::runtime_error("cross_validate: dataset has no label column");
  const auto& labels = d.label().codes;
  check_binary(labels, "cross_validate");

  std::vector<EvalReport> reports;
  for (std::size_t rep = 0; rep < repeats; ++rep) {
    auto folds = stratified_folds(labels, k, seed, rep);
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::size_t> train_rows;
      for (std::size_t other = 0; other < k; ++other)
        if (other != f)
          train_rows.insert(train_rows.end(), folds[other].begin(), folds[other].end());
      std::sort(train_rows.begin(), train_rows.end());

      EvalReport report;
      std::size_t pos = 0;
      for (std::size_t r : train_rows) pos += labels[r];
      if (pos == 0 || pos == train_rows.size()) {
        report.failed = true;
        report.note = "single-class training labels";
      } else {
        try {
          report = run_fold(take_rows(d, train_rows), take_rows(d, folds[f]));
        } catch (const std::exception& e) {
          report = EvalReport{};
          report.failed = true;
          report.note = e.what();
        }
      }
      report.repeat = rep;
      report.fold = f;
      reports.push_back(std::move(report));
    }
  }
  return reports;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b,
                                    std::size_t exact_limit) {
  if (a.empty() || a.size() != b.size())
    throw std::runtime_error("wilcoxon_signed_rank: bad input lengths");

  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    if (!std::isfinite(d)) throw std::runtime_error("wilcoxon_signed_rank: non-finite input");
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult res;
  res.n = diffs.size();
  if (diffs.empty()) {
    res.all_zero = true;
    res.exact = true;
    return res;
  }

  std::size_t n = diffs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return std::fabs(diffs[x]) < std::fabs(diffs[y]);
  });

  // doubled ranks stay integral under average-rank ties
  std::vector<std::uint64_t> rank2(n, 0);
  std::vector<std::size_t> tie_sizes;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && std::fabs(diffs[order[j]]) == std::fabs(diffs[order[i]])) ++j;
    std::uint64_t avg2 = static_cast<std::uint64_t>(i + 1 + j);  // 2 * (i+1 + j) / 2
    for (std::size_t t = i; t < j; ++t) rank2[order[t]] = avg2;
    tie_sizes.push_back(j - i);
    i = j;
  }

  std::uint64_t w2_plus = 0, t2 = 0;
  for (std::size_t idx = 0; idx < n; ++idx) {
    t2 += rank2[idx];
    if (diffs[idx] > 0.0) w2_plus += rank2[idx];
  }
  std::uint64_t w2 = std::min(w2_plus, t2 - w2_plus);
  res.w = static_cast<double>(w2) / 2.0;

  if (n <= exact_limit && n < 63) {
    res.exact = true;
    // Gray-code walk over all sign assignments, tracking 2*W+.
    std::uint64_t states = std::uint64_t{1} << n;
    std::uint64_t cur = 0, mask = 0, hits = 1;  // all-minus start: 0 <= w2
    for (std::uint64_t s = 1; s < states; ++s) {
      unsigned bit = static_cast<unsigned>(__builtin_ctzll(s));
      std::uint64_t flag = std::uint64_t{1} << bit;
      mask ^= flag;
      if (mask & flag)
        cur += rank2[bit];
      else
        cur -= rank2[bit];
      if (cur <= w2) ++hits;
    }
    res.p = std::min(1.0, 2.0 * static_cast<double>(hits) / static_cast<double>(states));
    return res;
  }

  double dn = static_cast<double>(n);
  double mu = dn * (dn + 1.0) / 4.0;
  double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0;
  for (std::size_t t : tie_sizes) {
    double dt = static_cast<double>(t);
    var -= (dt * dt * dt - dt) / 48.0;
  }
  double z = (res.w - mu + 0.5) / std::sqrt(var);
  res.p = std::min(1.0, normal_two_sided(z));
  return res;
}

}  // namespace adpred
