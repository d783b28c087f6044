#include "adpred/selectors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "adpred/chi2.hpp"

namespace adpred {
namespace {

constexpr const char* kMissingLevel = "__MISSING__";

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::domain_error("alpha out of domain (must be in (0, 1))");
}

double critical_value(double df, double alpha) {
  check_alpha(alpha);
  return chi2_quantile(1.0 - alpha, df);
}

}  // namespace

ContingencyTable build_table(const Column& feature, const Column& label) {
  if (feature.is_numeric())
    throw std::invalid_argument("build_table: feature column must be categorical");
  if (label.is_numeric())
    throw std::invalid_argument("build_table: label column must be categorical");
  if (feature.codes.size() != label.codes.size())
    throw std::invalid_argument("build_table: column lengths differ");

  const std::size_t r0 = feature.levels.size();
  const std::size_t c0 = label.levels.size();
  std::vector<double> raw(r0 * c0, 0.0);
  for (std::size_t i = 0; i < feature.codes.size(); ++i) {
    auto f = feature.codes[i];
    auto y = label.codes[i];
    if (f == kMissingCode || y == kMissingCode) continue;
    raw[static_cast<std::size_t>(f) * c0 + static_cast<std::size_t>(y)] += 1.0;
  }

  std::vector<std::size_t> live_rows, live_cols;
  for (std::size_t i = 0; i < r0; ++i) {
    double t = 0.0;
    for (std::size_t j = 0; j < c0; ++j) t += raw[i * c0 + j];
    if (t > 0.0) live_rows.push_back(i);
  }
  for (std::size_t j = 0; j < c0; ++j) {
    double t = 0.0;
    for (std::size_t i = 0; i < r0; ++i) t += raw[i * c0 + j];
    if (t > 0.0) live_cols.push_back(j);
  }
  if (live_rows.size() < 2 || live_cols.size() < 2)
    throw std::runtime_error("degenerate table");

  ContingencyTable t;
  t.counts.assign(live_rows.size(), std::vector<double>(live_cols.size(), 0.0));
  t.row_totals.assign(live_rows.size(), 0.0);
  t.col_totals.assign(live_cols.size(), 0.0);
  for (std::size_t i = 0; i < live_rows.size(); ++i) {
    for (std::size_t j = 0; j < live_cols.size(); ++j) {
      double v = raw[live_rows[i] * c0 + live_cols[j]];
      t.counts[i][j] = v;
      t.row_totals[i] += v;
      t.col_totals[j] += v;
      t.n += v;
    }
  }
  t.df = static_cast<double>((live_rows.size() - 1) * (live_cols.size() - 1));
  return t;
}

ContingencyTable table_from_counts(const std::vector<std::vector<double>>& counts) {
  if (counts.empty() || counts[0].empty())
    throw std::invalid_argument("table_from_counts: empty matrix");
  const std::size_t c0 = counts[0].size();
  for (const auto& row : counts) {
    if (row.size() != c0)
      throw std::invalid_argument("table_from_counts: ragged matrix");
    for (double v : row)
      if (!std::isfinite(v) || v < 0.0)
        throw std::invalid_argument("table_from_counts: counts must be finite and non-negative");
  }

  std::vector<std::size_t> live_rows, live_cols;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    double t = 0.0;
    for (std::size_t j = 0; j < c0; ++j) t += counts[i][j];
    if (t > 0.0) live_rows.push_back(i);
  }
  for (std::size_t j = 0; j < c0; ++j) {
    double t = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][j];
    if (t > 0.0) live_cols.push_back(j);
  }
  if (live_rows.size() < 2 || live_cols.size() < 2)
    throw std::runtime_error("degenerate table");

  ContingencyTable t;
  t.counts.assign(live_rows.size(), std::vector<double>(live_cols.size(), 0.0));
  t.row_totals.assign(live_rows.size(), 0.0);
  t.col_totals.assign(live_cols.size(), 0.0);
  for (std::size_t i = 0; i < live_rows.size(); ++i) {
    for (std::size_t j = 0; j < live_cols.size(); ++j) {
      double v = counts[live_rows[i]][live_cols[j]];
      t.counts[i][j] = v;
      t.row_totals[i] += v;
      t.col_totals[j] += v;
      t.n += v;
    }
  }
  t.df = static_cast<double>((live_rows.size() - 1) * (live_cols.size() - 1));
  return t;
}

Column bin_numeric(const Column& col, int bins) {
  if (!col.is_numeric())
    throw std::invalid_argument("bin_numeric: column must be numeric");
  if (bins < 1) throw std::domain_error("bin_numeric: bins must be >= 1");

  std::vector<double> sorted;
  sorted.reserve(col.num.size());
  for (double v : col.num)
    if (!is_missing(v)) sorted.push_back(v);
  std::sort(sorted.begin(), sorted.end());

  // upper edge of bin i is the ((i+1)/bins)-quantile order statistic; keeping
  // only distinct edges makes every level non-empty
  std::vector<double> edges;
  const std::size_t n = sorted.size();
  for (int i = 1; i <= bins && n > 0; ++i) {
    std::size_t idx = (n * static_cast<std::size_t>(i) + static_cast<std::size_t>(bins) - 1) /
                      static_cast<std::size_t>(bins);  // ceil(n*i/bins)
    double e = sorted[idx - 1];
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }

  Column out;
  out.schema = {col.schema.name, ColumnKind::categorical, col.schema.role};
  for (std::size_t i = 0; i < edges.size(); ++i) out.levels.push_back("b" + std::to_string(i));
  std::int32_t missing_level = kMissingCode;
  out.codes.reserve(col.num.size());
  for (double v : col.num) {
    if (is_missing(v)) {
      if (missing_level == kMissingCode) {
        missing_level = static_cast<std::int32_t>(out.levels.size());
        out.levels.push_back(kMissingLevel);
      }
      out.codes.push_back(missing_level);
      continue;
    }
    auto it = std::lower_bound(edges.begin(), edges.end(), v);
    out.codes.push_back(static_cast<std::int32_t>(it - edges.begin()));
  }
  return out;
}

Chi2Result chi2_statistic(const ContingencyTable& t) {
  double stat = 0.0;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) {
      double e = t.row_totals[i] * t.col_totals[j] / t.n;
      double d = t.counts[i][j] - e;
      stat += d * d / e;
    }
  }
  return {stat, t.df, chi2_sf(stat, t.df)};
}

double p_adj(double statistic, double df, double alpha) {
  double c = critical_value(df, alpha);
  return (statistic - c) / c;
}

double p_adj_soft(double statistic, double df, double alpha) {
  double c = critical_value(df, alpha);
  if (c <= 1.0) throw std::runtime_error("soft penalty undefined: critical value <= 1");
  return (statistic - c) / std::log(c);
}

double mutual_information(const ContingencyTable& t) {
  double mi = 0.0;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) {
      double o = t.counts[i][j];
      if (o <= 0.0) continue;
      mi += (o / t.n) * std::log(o * t.n / (t.row_totals[i] * t.col_totals[j]));
    }
  }
  if (mi < 0.0 && mi >= -1e-12) mi = 0.0;
  return mi;
}

MiAdjResult mi_adj(const ContingencyTable& t, double alpha) {
  double mi = mutual_information(t);
  double score = 2.0 * t.n * mi - critical_value(t.df, alpha);
  return {mi, score, score > 0.0};
}

std::vector<FeatureScore> rank_features(const Dataset& d, Selector sel,
                                        const SelectorConfig& cfg) {
  if (!d.has_label()) throw std::runtime_error("rank_features: dataset has no label column");
  check_alpha(cfg.alpha);
  const Column& y = d.label();

  std::vector<FeatureScore> scores;
  for (const auto& col : d.columns) {
    if (col.schema.role != ColumnRole::feature) continue;
    FeatureScore fs;
    fs.feature = col.schema.name;
    fs.selector = sel;
    try {
      ContingencyTable t = col.is_numeric()
                               ? build_table(bin_numeric(col, cfg.numeric_bins), y)
                               : build_table(col, y);
      switch (sel) {
        case Selector::chi2_pvalue: {
          auto r = chi2_statistic(t);
          fs.statistic = r.statistic;
          fs.df = r.df;
          fs.p_value = r.p_value;
          fs.adjusted_score = r.p_value;  // ranking key: smaller is better
          break;
        }
        case Selector::p_adj:
        case Selector::p_adj_soft: {
          auto r = chi2_statistic(t);
          fs.statistic = r.statistic;
          fs.df = r.df;
          fs.p_value = r.p_value;
          fs.adjusted_score = sel == Selector::p_adj
                                  ? p_adj(r.statistic, r.df, cfg.alpha)
                                  : p_adj_soft(r.statistic, r.df, cfg.alpha);
          break;
        }
        case Selector::mi: {
          fs.statistic = mutual_information(t);
          fs.df = t.df;
          fs.adjusted_score = fs.statistic;
          break;
        }
        case Selector::mi_adj: {
          auto r = mi_adj(t, cfg.alpha);
          fs.statistic = r.mi;
          fs.df = t.df;
          fs.p_value = chi2_sf(2.0 * t.n * r.mi, t.df);
          fs.adjusted_score = r.score;
          break;
        }
      }
    } catch (const std::runtime_error& e) {
      if (std::string(e.what()) != "degenerate table") throw;
      fs.degenerate = true;
      fs.note = e.what();
    }
    scores.push_back(std::move(fs));
  }

  std::sort(scores.begin(), scores.end(), [sel](const FeatureScore& a, const FeatureScore& b) {
    if (a.degenerate != b.degenerate) return b.degenerate;
    if (!a.degenerate) {
      if (sel == Selector::chi2_pvalue) {
        if (a.p_value != b.p_value) return a.p_value < b.p_value;
      } else {
        if (a.adjusted_score != b.adjusted_score) return a.adjusted_score > b.adjusted_score;
      }
    }
    return a.feature < b.feature;
  });

  for (std::size_t i = 0; i < scores.size(); ++i) {
    FeatureScore& fs = scores[i];
    fs.rank = i + 1;
    bool within_k = fs.rank <= cfg.top_k;
    bool extra = true;
    if (sel == Selector::chi2_pvalue) extra = fs.p_value < cfg.alpha;
    if (sel == Selector::mi_adj) extra = fs.adjusted_score > 0.0;
    fs.keep = !fs.degenerate && within_k && extra;
  }
  return scores;
}

std::string selector_name(Selector s) {
  switch (s) {
    case Selector::chi2_pvalue: return "chi2";
    case Selector::p_adj: return "p_adj";
    case Selector::p_adj_soft: return "p_adj_soft";
    case Selector::mi: return "mi";
    case Selector::mi_adj: return "mi_adj";
  }
  throw std::logic_error("unreachable selector");
}

Selector selector_from_name(const std::string& name) {
  if (name == "chi2") return Selector::chi2_pvalue;
  if (name == "p_adj") return Selector::p_adj;
  if (name == "p_adj_soft") return Selector::p_adj_soft;
  if (name == "mi") return Selector::mi;
  if (name == "mi_adj") return Selector::mi_adj;
  throw std::runtime_error("unknown selector: " + name +
                           " (expected chi2|p_adj|p_adj_soft|mi|mi_adj)");
}

namespace {

void put_number(std::ostream& os, double v) {
  if (std::isnan(v)) {
    os << "nan";
    return;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  os << buf;
}

}  // namespace

std::string scores_to_tsv(const std::vector<FeatureScore>& scores) {
  std::ostringstream os;
  os << "feature\tselector\tstatistic\tdf\tp_value\tadjusted_score\trank\tkeep\n";
  for (const auto& s : scores) {
    os << s.feature << '\t' << selector_name(s.selector) << '\t';
    put_number(os, s.degenerate ? std::numeric_limits<double>::quiet_NaN() : s.statistic);
    os << '\t' << static_cast<long long>(s.df) << '\t';
    put_number(os, s.p_value);
    os << '\t';
    put_number(os, s.degenerate ? std::numeric_limits<double>::quiet_NaN() : s.adjusted_score);
    os << '\t' << s.rank << '\t' << (s.keep ? "true" : "false") << '\n';
  }
  return os.str();
}

std::vector<std::string> kept_features_from_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty score file");
  if (line.rfind("feature\t", 0) != 0)
    throw std::runtime_error(path + ": not a score file (bad header)");
  std::vector<std::string> kept;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 8) throw std::runtime_error(path + ": malformed score row");
    if (fields[7] == "true") kept.push_back(fields[0]);
  }
  return kept;
}

}  // namespace adpred
