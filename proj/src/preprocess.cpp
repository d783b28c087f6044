#include "adpred/preprocess.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace adpred {
namespace {

std::uint64_t row_hash(const Dataset& d, std::size_t r) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  for (const auto& col : d.columns) {
    if (col.is_numeric())
      mix(numeric_bits(col.num[r]));
    else
      mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(col.codes[r])));
  }
  return h;
}

bool rows_equal(const Dataset& d, std::size_t a, std::size_t b) {
  for (const auto& col : d.columns) {
    if (col.is_numeric()) {
      if (numeric_bits(col.num[a]) != numeric_bits(col.num[b])) return false;
    } else {
      if (col.codes[a] != col.codes[b]) return false;
    }
  }
  return true;
}

Dataset filter_rows(const Dataset& d, const std::vector<std::size_t>& keep) {
  Dataset out;
  out.n_rows = keep.size();
  out.label_index = d.label_index;
  out.columns.reserve(d.columns.size());
  for (const auto& col : d.columns) {
    Column c;
    c.schema = col.schema;
    c.levels = col.levels;
    if (col.is_numeric()) {
      c.num.reserve(keep.size());
      for (std::size_t r : keep) c.num.push_back(col.num[r]);
    } else {
      c.codes.reserve(keep.size());
      for (std::size_t r : keep) c.codes.push_back(col.codes[r]);
    }
    out.columns.push_back(std::move(c));
  }
  return out;
}

double population_variance(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size());
}

std::int32_t find_or_add_level(Column& col, const std::string& level) {
  for (std::size_t i = 0; i < col.levels.size(); ++i)
    if (col.levels[i] == level) return static_cast<std::int32_t>(i);
  col.levels.push_back(level);
  return static_cast<std::int32_t>(col.levels.size() - 1);
}

}  // namespace

std::string CleaningReport::to_tsv() const {
  std::ostringstream os;
  auto line = [&os](const std::string& action, const std::string& column, std::size_t count) {
    os << action << '\t' << column << '\t' << count << '\n';
  };
  if (duplicate_rows_removed) line("duplicate_rows", "-", duplicate_rows_removed);
  if (rows_dropped_missing_label) line("rows_missing_label", "-", rows_dropped_missing_label);
  if (rows_dropped_missing_numeric)
    line("rows_missing_numeric", "-", rows_dropped_missing_numeric);
  for (const auto& [col, n] : imputed_missing_token) line("impute_missing_token", col, n);
  for (const auto& [col, n] : imputed_median) line("impute_median", col, n);
  for (const auto& [col, reason] : dropped_columns) line("drop_" + reason, col, 1);
  return os.str();
}

double median_ignoring_missing(const std::vector<double>& values) {
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values)
    if (!is_missing(x)) v.push_back(x);
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::pair<Dataset, CleaningReport> preprocess(const Dataset& d, const PreprocessConfig& cfg) {
  Dataset cur = d;
  CleaningReport rep;

  bool changed = true;
  while (changed) {
    changed = false;

    // collapse exact duplicate rows onto their first occurrence
    {
      std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
      std::vector<std::size_t> keep;
      keep.reserve(cur.n_rows);
      for (std::size_t r = 0; r < cur.n_rows; ++r) {
        auto& bucket = buckets[row_hash(cur, r)];
        bool dup = false;
        for (std::size_t prev : bucket) {
          if (rows_equal(cur, prev, r)) {
            dup = true;
            break;
          }
        }
        if (dup) continue;
        bucket.push_back(r);
        keep.push_back(r);
      }
      if (keep.size() != cur.n_rows) {
        rep.duplicate_rows_removed += cur.n_rows - keep.size();
        cur = filter_rows(cur, keep);
        changed = true;
      }
    }

    // rows whose label is missing carry no supervision; drop them
    if (cur.has_label()) {
      const Column& y = cur.label();
      std::vector<std::size_t> keep;
      keep.reserve(cur.n_rows);
      for (std::size_t r = 0; r < cur.n_rows; ++r)
        if (y.codes[r] != kMissingCode) keep.push_back(r);
      if (keep.size() != cur.n_rows) {
        rep.rows_dropped_missing_label += cur.n_rows - keep.size();
        cur = filter_rows(cur, keep);
        changed = true;
      }
    }

    // impute missing cells
    for (auto& col : cur.columns) {
      if (col.schema.role != ColumnRole::feature) continue;
      if (col.is_numeric()) continue;
      std::size_t miss = 0;
      for (auto c : col.codes)
        if (c == kMissingCode) ++miss;
      if (!miss) continue;
      std::int32_t token = find_or_add_level(col, cfg.categorical_missing_token);
      for (auto& c : col.codes)
        if (c == kMissingCode) c = token;
      rep.imputed_missing_token[col.schema.name] += miss;
      changed = true;
    }
    if (cfg.numeric_impute == NumericImpute::median) {
      for (auto& col : cur.columns) {
        if (col.schema.role != ColumnRole::feature || !col.is_numeric()) continue;
        std::vector<double> present;
        present.reserve(col.num.size());
        for (double v : col.num)
          if (!is_missing(v)) present.push_back(v);
        if (present.size() == col.num.size()) continue;
        double fill = median_ignoring_missing(present);
        std::size_t miss = 0;
        for (auto& v : col.num) {
          if (is_missing(v)) {
            v = fill;
            ++miss;
          }
        }
        rep.imputed_median[col.schema.name] += miss;
        changed = true;
      }
    } else {
      std::vector<std::size_t> keep;
      keep.reserve(cur.n_rows);
      for (std::size_t r = 0; r < cur.n_rows; ++r) {
        bool any = false;
        for (const auto& col : cur.columns) {
          if (col.schema.role == ColumnRole::feature && col.is_numeric() &&
              is_missing(col.num[r])) {
            any = true;
            break;
          }
        }
        if (!any) keep.push_back(r);
      }
      if (keep.size() != cur.n_rows) {
        rep.rows_dropped_missing_numeric += cur.n_rows - keep.size();
        cur = filter_rows(cur, keep);
        changed = true;
      }
    }

    // prune features that cannot carry information
    {
      std::vector<Column> kept;
      kept.reserve(cur.columns.size());
      int new_label = -1;
      for (std::size_t c = 0; c < cur.columns.size(); ++c) {
        Column& col = cur.columns[c];
        bool drop = false;
        if (col.schema.role == ColumnRole::feature) {
          if (col.is_numeric()) {
            if (population_variance(col.num) <= cfg.variance_epsilon) {
              rep.dropped_columns.emplace_back(col.schema.name, "low_variance");
              drop = true;
            }
          } else {
            std::vector<bool> seen(col.levels.size(), false);
            std::size_t distinct = 0;
            for (auto code : col.codes) {
              if (code == kMissingCode) continue;
              if (!seen[static_cast<std::size_t>(code)]) {
                seen[static_cast<std::size_t>(code)] = true;
                ++distinct;
              }
            }
            if (distinct < 2) {
              rep.dropped_columns.emplace_back(col.schema.name, "single_level");
              drop = true;
            }
          }
        }
        if (drop) {
          changed = true;
          continue;
        }
        if (static_cast<int>(c) == cur.label_index) new_label = static_cast<int>(kept.size());
        kept.push_back(std::move(col));
      }
      cur.columns = std::move(kept);
      cur.label_index = new_label;
    }
  }

  if (cur.feature_count() == 0) {
    throw std::runtime_error("no features survive preprocessing");
  }
  return {std::move(cur), std::move(rep)};
}

}  // namespace adpred
