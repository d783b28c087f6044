#include "adpred/forest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "adpred/parallel.hpp"
#include "adpred/rng.hpp"
#include "adpred/text.hpp"

namespace adpred {

namespace {

double gini(std::size_t count, std::size_t pos) {
  if (count == 0) return 0.0;
  double p = static_cast<double>(pos) / static_cast<double>(count);
  return 2.0 * p * (1.0 - p);
}

struct ValueGroup {
  double v = 0.0;
  std::size_t cnt = 0;
  std::size_t pos = 0;
};

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double decrease = -1.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const EncodedMatrix& x, const std::vector<std::int32_t>& y,
              const ForestConfig& cfg, const std::vector<std::size_t>& active_cols,
              std::size_t mtry, std::uint64_t tree_seed)
      : x_(x), y_(y), cfg_(cfg), active_(active_cols), mtry_(mtry), rng_(tree_seed) {}

  Tree build() {
    std::size_t n = x_.n_rows;
    rows_.resize(n);
    for (std::size_t i = 0; i < n; ++i) rows_[i] = bounded(rng_, n);

    Tree tree;
    struct Work {
      std::size_t begin, end, depth;
      std::ptrdiff_t parent;  // -1 for the root
      bool is_left;
    };
    std::vector<Work> stack;
    stack.push_back({0, n, 0, -1, false});
    while (!stack.empty()) {
      Work w = stack.back();
      stack.pop_back();
      std::size_t idx = tree.nodes.size();
      tree.nodes.emplace_back();
      if (w.parent >= 0) {
        auto& parent = tree.nodes[static_cast<std::size_t>(w.parent)];
        (w.is_left ? parent.left : parent.right) = static_cast<std::int64_t>(idx);
      }

      std::size_t count = w.end - w.begin, pos = 0;
      for (std::size_t i = w.begin; i < w.end; ++i) pos += y_[rows_[i]] != 0;

      bool can_split = pos != 0 && pos != count && count >= 2 * cfg_.min_samples_leaf &&
                       (cfg_.max_depth == 0 || w.depth < cfg_.max_depth);
      SplitChoice split;
      if (can_split) split = best_split(w.begin, w.end, count, pos);
      if (!split.found) {
        tree.nodes[idx].value = static_cast<double>(pos) / static_cast<double>(count);
        continue;
      }

      tree.nodes[idx].feature = split.feature;
      tree.nodes[idx].threshold = split.threshold;
      std::size_t mid = partition(w.begin, w.end, split.feature, split.threshold);
      stack.push_back({mid, w.end, w.depth + 1, static_cast<std::ptrdiff_t>(idx), false});
      stack.push_back({w.begin, mid, w.depth + 1, static_cast<std::ptrdiff_t>(idx), true});
    }
    return tree;
  }

 private:
  // Floyd's sampling: mtry distinct positions of active_, order deterministic.
  void sample_candidates() {
    candidates_.clear();
    seen_.clear();
    std::size_t pool = active_.size();
    std::size_t k = std::min(mtry_, pool);
    for (std::size_t i = pool - k; i < pool; ++i) {
      std::size_t j = bounded(rng_, i + 1);
      if (!seen_.insert(j).second) {
        seen_.insert(i);
        candidates_.push_back(active_[i]);
      } else {
        candidates_.push_back(active_[j]);
      }
    }
  }

  // Distinct node values of column col with per-value class counts, ascending.
  bool gather_groups(std::size_t begin, std::size_t end, std::size_t col) {
    groups_.clear();
    constexpr std::size_t kLinearCap = 64;
    bool overflow = false;
    for (std::size_t i = begin; i < end && !overflow; ++i) {
      double v = x_.at(rows_[i], col);
      bool hit = false;
      for (auto& g : groups_) {
        if (g.v == v) {
          ++g.cnt;
          g.pos += y_[rows_[i]] != 0;
          hit = true;
          break;
        }
      }
      if (!hit) {
        if (groups_.size() == kLinearCap) {
          overflow = true;
          break;
        }
        groups_.push_back({v, 1, static_cast<std::size_t>(y_[rows_[i]] != 0)});
      }
    }
    if (overflow) {
      pairs_.clear();
      for (std::size_t i = begin; i < end; ++i)
        pairs_.emplace_back(x_.at(rows_[i], col), y_[rows_[i]] != 0 ? 1 : 0);
      std::sort(pairs_.begin(), pairs_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      groups_.clear();
      for (const auto& [v, lab] : pairs_) {
        if (groups_.empty() || groups_.back().v != v) groups_.push_back({v, 0, 0});
        ++groups_.back().cnt;
        groups_.back().pos += static_cast<std::size_t>(lab);
      }
    } else {
      std::sort(groups_.begin(), groups_.end(),
                [](const ValueGroup& a, const ValueGroup& b) { return a.v < b.v; });
    }
    return groups_.size() >= 2;
  }

  SplitChoice best_split(std::size_t begin, std::size_t end, std::size_t count,
                         std::size_t pos) {
    sample_candidates();
    SplitChoice best;
    double parent = gini(count, pos);
    for (std::size_t col : candidates_) {
      if (!gather_groups(begin, end, col)) continue;
      std::size_t cnt_left = 0, pos_left = 0;
      for (std::size_t k = 0; k + 1 < groups_.size(); ++k) {
        cnt_left += groups_[k].cnt;
        pos_left += groups_[k].pos;
        std::size_t cnt_right = count - cnt_left;
        if (cnt_left < cfg_.min_samples_leaf || cnt_right < cfg_.min_samples_leaf) continue;
        double weighted = (static_cast<double>(cnt_left) * gini(cnt_left, pos_left) +
                           static_cast<double>(cnt_right) * gini(cnt_right, pos - pos_left)) /
                          static_cast<double>(count);
        double decrease = parent - weighted;
        if (decrease > best.decrease) {
          double lo = groups_[k].v, hi = groups_[k + 1].v;
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;  // adjacent doubles: keep the right child nonempty
          best.found = true;
          best.feature = col;
          best.threshold = mid;
          best.decrease = decrease;
        }
      }
    }
    return best;
  }

  // Stable two-pass partition of rows_[begin, end) on value <= threshold.
  std::size_t partition(std::size_t begin, std::size_t end, std::size_t col,
                        double threshold) {
    scratch_.clear();
    std::size_t write = begin;
    for (std::size_t i = begin; i < end; ++i) {
      if (x_.at(rows_[i], col) <= threshold)
        rows_[write++] = rows_[i];
      else
        scratch_.push_back(rows_[i]);
    }
    std::size_t mid = write;
    for (std::size_t r : scratch_) rows_[write++] = r;
    return mid;
  }

  const EncodedMatrix& x_;
  const std::vector<std::int32_t>& y_;
  const ForestConfig& cfg_;
  const std::vector<std::size_t>& active_;
  std::size_t mtry_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> rows_, scratch_, candidates_;
  std::unordered_set<std::size_t> seen_;
  std::vector<ValueGroup> groups_;
  std::vector<std::pair<double, int>> pairs_;
};

double score_row(const Tree& t, const EncodedMatrix& x, std::size_t row) {
  std::size_t i = 0;
  while (!t.nodes[i].is_leaf()) {
    const TreeNode& nd = t.nodes[i];
    double v = x.at(row, nd.feature);
    i = static_cast<std::size_t>(v <= nd.threshold ? nd.left : nd.right);
  }
  return t.nodes[i].value;
}

[[noreturn]] void bad_line(std::size_t line_no) {
  throw std::runtime_error("forest file: malformed line " + std::to_string(line_no));
}

std::uint64_t parse_u64(const std::string& s, std::size_t line_no) {
  std::uint64_t v;
  if (!try_parse_u64(s, v)) bad_line(line_no);
  return v;
}

double parse_hex_double(const std::string& s, std::size_t line_no) {
  double v;
  if (!try_parse_double(s, v)) bad_line(line_no);
  return v;
}

}  // namespace

ForestModel fit_forest(const EncodedMatrix& x, const std::vector<std::int32_t>& y,
                       const ForestConfig& cfg, std::size_t threads) {
  if (cfg.n_trees < 1) throw std::domain_error("n_trees out of domain (must be >= 1)");
  if (cfg.min_samples_leaf < 1)
    throw std::domain_error("min_samples_leaf out of domain (must be >= 1)");
  if (x.n_rows != y.size())
    throw std::runtime_error("fit_forest: row count does not match label count");
  if (x.n_rows < 2) throw std::runtime_error("fit_forest: need at least 2 rows");
  std::size_t pos = 0;
  for (std::int32_t lab : y) {
    if (lab != 0 && lab != 1) throw std::runtime_error("fit_forest: labels must be 0/1");
    pos += lab;
  }
  if (pos == 0 || pos == y.size()) throw std::runtime_error("degenerate labels");

  // all-zero columns can never split, so candidates come from the live ones
  std::vector<bool> live(x.n_cols, false);
  for (std::size_t k = 0; k < x.col_idx.size(); ++k)
    if (x.values[k] != 0.0) live[x.col_idx[k]] = true;
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < x.n_cols; ++j)
    if (live[j]) active.push_back(j);

  std::size_t mtry = cfg.features_per_split;
  if (mtry == 0)
    mtry = static_cast<std::size_t>(
        std::lround(std::sqrt(static_cast<double>(x.n_cols))));
  if (mtry == 0) mtry = 1;

  ForestModel m;
  m.config = cfg;
  m.n_cols = x.n_cols;
  m.trees.resize(cfg.n_trees);
  parallel_chunks(cfg.n_trees, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      TreeBuilder builder(x, y, cfg, active, mtry, mix64(cfg.seed, t));
      m.trees[t] = builder.build();
    }
  });
  return m;
}

std::vector<double> predict_proba(const ForestModel& m, const EncodedMatrix& x,
                                  std::size_t threads) {
  if (x.n_cols != m.n_cols)
    throw std::runtime_error("column mismatch: model fitted on " + std::to_string(m.n_cols) +
                             " columns, input has " + std::to_string(x.n_cols));
  std::vector<double> scores(x.n_rows, 0.0);
  parallel_chunks(x.n_rows, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      double sum = 0.0;
      for (const auto& tree : m.trees) sum += score_row(tree, x, r);
      scores[r] = sum / static_cast<double>(m.trees.size());
    }
  });
  return scores;
}

std::vector<std::int32_t> predict_label(const ForestModel& m, const EncodedMatrix& x,
                                        double threshold, std::size_t threads) {
  auto scores = predict_proba(m, x, threads);
  std::vector<std::int32_t> labels(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) labels[i] = scores[i] >= threshold ? 1 : 0;
  return labels;
}

std::string forest_to_text(const ForestModel& m) {
  std::ostringstream out;
  out << "adpred-forest\t1\n";
  out << "config\t" << m.config.n_trees << "\t" << m.config.min_samples_leaf << "\t"
      << m.config.max_depth << "\t" << m.config.features_per_split << "\t" << m.config.seed
      << "\t" << m.n_cols << "\n";
  for (const auto& tree : m.trees) {
    out << "tree\t" << tree.nodes.size() << "\n";
    for (const auto& nd : tree.nodes) {
      if (nd.is_leaf())
        out << "l\t" << hex_double(nd.value) << "\n";
      else
        out << "s\t" << nd.feature << "\t" << nd.left << "\t" << nd.right << "\t"
            << hex_double(nd.threshold) << "\n";
    }
  }
  return out.str();
}

ForestModel forest_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&] {
    if (!std::getline(in, line)) throw std::runtime_error("forest file: truncated");
    ++line_no;
  };

  ++line_no;
  if (!std::getline(in, line) || line != "adpred-forest\t1")
    throw std::runtime_error("not a forest file (bad header)");

  next_line();
  auto cf = split_tabs(line);
  if (cf.size() != 7 || cf[0] != "config") bad_line(line_no);
  ForestModel m;
  m.config.n_trees = parse_u64(cf[1], line_no);
  m.config.min_samples_leaf = parse_u64(cf[2], line_no);
  m.config.max_depth = parse_u64(cf[3], line_no);
  m.config.features_per_split = parse_u64(cf[4], line_no);
  m.config.seed = parse_u64(cf[5], line_no);
  m.n_cols = parse_u64(cf[6], line_no);

  for (std::size_t t = 0; t < m.config.n_trees; ++t) {
    next_line();
    auto tf = split_tabs(line);
    if (tf.size() != 2 || tf[0] != "tree") bad_line(line_no);
    std::size_t count = parse_u64(tf[1], line_no);
    if (count == 0) bad_line(line_no);
    Tree tree;
    tree.nodes.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      next_line();
      auto nf = split_tabs(line);
      TreeNode nd;
      if (nf.size() == 2 && nf[0] == "l") {
        nd.value = parse_hex_double(nf[1], line_no);
      } else if (nf.size() == 5 && nf[0] == "s") {
        nd.feature = parse_u64(nf[1], line_no);
        nd.left = static_cast<std::int64_t>(parse_u64(nf[2], line_no));
        nd.right = static_cast<std::int64_t>(parse_u64(nf[3], line_no));
        nd.threshold = parse_hex_double(nf[4], line_no);
        bool left_ok = nd.left > static_cast<std::int64_t>(i) &&
                       nd.left < static_cast<std::int64_t>(count);
        bool right_ok = nd.right > static_cast<std::int64_t>(i) &&
                        nd.right < static_cast<std::int64_t>(count);
        if (!left_ok || !right_ok || nd.feature >= m.n_cols) bad_line(line_no);
      } else {
        bad_line(line_no);
      }
      tree.nodes[i] = nd;
    }
    m.trees.push_back(std::move(tree));
  }
  if (std::getline(in, line) && !line.empty())
    throw std::runtime_error("forest file: trailing content");
  return m;
}

}  // namespace adpred
