#include "adpred/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "adpred/text.hpp"

namespace adpred {

namespace {

bool power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

std::string unescape_field(const std::string& s, std::size_t line_no) {
  std::string out;
  if (!try_unescape_field(s, out))
    throw std::runtime_error("encoder file: bad escape on line " + std::to_string(line_no));
  return out;
}

double parse_double_field(const std::string& s, std::size_t line_no) {
  double v;
  if (!try_parse_double(s, v))
    throw std::runtime_error("encoder file: bad number on line " + std::to_string(line_no));
  return v;
}

std::size_t parse_size_field(const std::string& s, std::size_t line_no) {
  std::uint64_t v;
  if (!try_parse_u64(s, v))
    throw std::runtime_error("encoder file: bad count on line " + std::to_string(line_no));
  return static_cast<std::size_t>(v);
}

[[noreturn]] void schema_mismatch(const std::string& feature, const char* why) {
  throw std::runtime_error("schema mismatch: feature '" + feature + "' " + why);
}

// levels observed in col ordered most frequent first, ties by name
std::vector<std::string> ranked_levels(const Column& col) {
  std::vector<std::size_t> counts(col.levels.size(), 0);
  for (std::int32_t code : col.codes)
    if (code != kMissingCode) ++counts[static_cast<std::size_t>(code)];
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] > 0) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return col.levels[a] < col.levels[b];
  });
  std::vector<std::string> out;
  out.reserve(order.size());
  for (std::size_t i : order) out.push_back(col.levels[i]);
  return out;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::pair<double, double> fit_min_max(const std::vector<double>& v) {
  double lo = 0.0, hi = 0.0;
  bool seen = false;
  for (double x : v) {
    if (is_missing(x)) continue;
    if (!seen) {
      lo = hi = x;
      seen = true;
    } else {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  return {lo, hi};
}

double min_max_scale(double v, double min, double max) {
  if (max <= min) return 0.0;
  double s = (v - min) / (max - min);
  return std::clamp(s, 0.0, 1.0);
}

std::vector<double> min_max_scale(const std::vector<double>& v, double min, double max) {
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v) out.push_back(min_max_scale(x, min, max));
  return out;
}

EncoderSpec fit_encoder(const Dataset& d, std::size_t cardinality_threshold,
                        std::size_t hash_buckets) {
  if (cardinality_threshold < 1)
    throw std::domain_error("cardinality_threshold out of domain (must be >= 1)");
  if (!power_of_two(hash_buckets))
    throw std::domain_error("hash_buckets out of domain (must be a power of two)");
  EncoderSpec e;
  e.cardinality_threshold = cardinality_threshold;
  e.hash_buckets = hash_buckets;
  for (const auto& col : d.columns) {
    if (col.schema.role != ColumnRole::feature) continue;
    FittedFeature f;
    f.name = col.schema.name;
    if (col.is_numeric()) {
      f.kind = EncodingKind::numeric;
      std::tie(f.min, f.max) = fit_min_max(col.num);
    } else {
      f.levels = ranked_levels(col);
      f.kind = f.levels.size() > cardinality_threshold ? EncodingKind::hashed
                                                       : EncodingKind::one_hot;
    }
    e.features.push_back(std::move(f));
  }
  return e;
}

EncodedMatrix transform(const Dataset& d, const EncoderSpec& e) {
  EncodedMatrix m;
  m.n_rows = d.n_rows;

  struct Plan {
    const Column* col = nullptr;
    const FittedFeature* fit = nullptr;
    std::size_t offset = 0;
    // per dataset-level code: target column offset inside the block, or -1 if
    // the level was not seen at fit
    std::vector<std::ptrdiff_t> code_map;
  };
  std::vector<Plan> plans;
  std::size_t offset = 0;
  for (const auto& f : e.features) {
    const Column* col = d.find(f.name);
    if (col == nullptr) schema_mismatch(f.name, "absent at transform");
    if (col->is_numeric() != (f.kind == EncodingKind::numeric))
      schema_mismatch(f.name, "changed kind between fit and transform");

    Plan p;
    p.col = col;
    p.fit = &f;
    p.offset = offset;
    std::size_t width = 1;
    if (f.kind == EncodingKind::one_hot || f.kind == EncodingKind::hashed) {
      std::unordered_map<std::string_view, std::size_t> rank;
      for (std::size_t i = 0; i < f.levels.size(); ++i) rank.emplace(f.levels[i], i);
      p.code_map.assign(col->levels.size(), -1);
      for (std::size_t c = 0; c < col->levels.size(); ++c) {
        auto it = rank.find(col->levels[c]);
        if (it == rank.end()) continue;
        if (f.kind == EncodingKind::one_hot) {
          p.code_map[c] = static_cast<std::ptrdiff_t>(it->second);
        } else {
          std::uint64_t h = fnv1a64(f.name + "=" + col->levels[c]);
          p.code_map[c] = static_cast<std::ptrdiff_t>(h & (e.hash_buckets - 1));
        }
      }
      width = f.kind == EncodingKind::one_hot ? f.levels.size() : e.hash_buckets;
    }
    m.blocks.push_back({f.name, f.kind, offset, width});
    offset += width;
    plans.push_back(std::move(p));
  }
  m.n_cols = offset;

  m.row_ptr.assign(m.n_rows + 1, 0);
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    m.row_ptr[r] = m.col_idx.size();
    for (const auto& p : plans) {
      if (p.fit->kind == EncodingKind::numeric) {
        double v = p.col->num[r];
        if (is_missing(v)) schema_mismatch(p.fit->name, "has missing values at transform");
        double s = min_max_scale(v, p.fit->min, p.fit->max);
        if (s != 0.0) {
          m.col_idx.push_back(p.offset);
          m.values.push_back(s);
        }
      } else {
        std::int32_t code = p.col->codes[r];
        if (code == kMissingCode) continue;
        std::ptrdiff_t target = p.code_map[static_cast<std::size_t>(code)];
        if (target < 0) continue;
        m.col_idx.push_back(p.offset + static_cast<std::size_t>(target));
        m.values.push_back(1.0);
      }
    }
  }
  m.row_ptr[m.n_rows] = m.col_idx.size();
  return m;
}

double EncodedMatrix::at(std::size_t row, std::size_t col) const {
  auto begin = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[row]);
  auto end = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[row + 1]);
  auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return 0.0;
  return values[static_cast<std::size_t>(it - col_idx.begin())];
}

std::string EncodedMatrix::describe_column(std::size_t col) const {
  for (const auto& b : blocks) {
    if (col < b.offset || col >= b.offset + b.width) continue;
    if (b.kind == EncodingKind::numeric) return b.feature;
    if (b.kind == EncodingKind::hashed)
      return b.feature + "#" + std::to_string(col - b.offset);
    return b.feature + "=" + std::to_string(col - b.offset);
  }
  throw std::out_of_range("describe_column: column index out of range");
}

CscMatrix to_csc(const EncodedMatrix& m) {
  CscMatrix c;
  c.n_rows = m.n_rows;
  c.n_cols = m.n_cols;
  c.col_ptr.assign(m.n_cols + 1, 0);
  for (std::size_t col : m.col_idx) ++c.col_ptr[col + 1];
  for (std::size_t j = 0; j < m.n_cols; ++j) c.col_ptr[j + 1] += c.col_ptr[j];
  c.row_idx.resize(m.col_idx.size());
  c.values.resize(m.col_idx.size());
  std::vector<std::size_t> cursor(c.col_ptr.begin(), c.col_ptr.end() - 1);
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
      std::size_t dst = cursor[m.col_idx[k]]++;
      c.row_idx[dst] = r;
      c.values[dst] = m.values[k];
    }
  }
  return c;
}

std::string encoder_to_text(const EncoderSpec& e) {
  std::ostringstream out;
  out << "adpred-encoder\t1\n";
  out << "threshold\t" << e.cardinality_threshold << "\n";
  out << "buckets\t" << e.hash_buckets << "\n";
  for (const auto& f : e.features) {
    switch (f.kind) {
      case EncodingKind::numeric:
        out << "numeric\t" << escape_field(f.name) << "\t" << hex_double(f.min) << "\t"
            << hex_double(f.max) << "\n";
        break;
      case EncodingKind::one_hot:
      case EncodingKind::hashed:
        out << (f.kind == EncodingKind::one_hot ? "onehot" : "hashed") << "\t"
            << escape_field(f.name) << "\t" << f.levels.size() << "\n";
        for (const auto& level : f.levels) out << "l\t" << escape_field(level) << "\n";
        break;
    }
  }
  return out.str();
}

EncoderSpec encoder_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&](bool required) {
    if (!std::getline(in, line)) {
      if (required) throw std::runtime_error("encoder file: truncated");
      return false;
    }
    ++line_no;
    return true;
  };

  if (!next_line(false) || line != "adpred-encoder\t1")
    throw std::runtime_error("not an encoder file (bad header)");

  EncoderSpec e;
  bool saw_threshold = false, saw_buckets = false;
  while (next_line(false)) {
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    const std::string& kw = fields[0];
    auto want = [&](std::size_t n) {
      if (fields.size() != n)
        throw std::runtime_error("encoder file: malformed line " + std::to_string(line_no));
    };
    if (kw == "threshold") {
      want(2);
      e.cardinality_threshold = parse_size_field(fields[1], line_no);
      saw_threshold = true;
    } else if (kw == "buckets") {
      want(2);
      e.hash_buckets = parse_size_field(fields[1], line_no);
      saw_buckets = true;
    } else if (kw == "numeric") {
      want(4);
      FittedFeature f;
      f.kind = EncodingKind::numeric;
      f.name = unescape_field(fields[1], line_no);
      f.min = parse_double_field(fields[2], line_no);
      f.max = parse_double_field(fields[3], line_no);
      e.features.push_back(std::move(f));
    } else if (kw == "onehot" || kw == "hashed") {
      want(3);
      FittedFeature f;
      f.kind = kw == "onehot" ? EncodingKind::one_hot : EncodingKind::hashed;
      f.name = unescape_field(fields[1], line_no);
      std::size_t k = parse_size_field(fields[2], line_no);
      f.levels.reserve(k);
      for (std::size_t i = 0; i < k; ++i) {
        next_line(true);
        auto lf = split_tabs(line);
        if (lf.size() != 2 || lf[0] != "l")
          throw std::runtime_error("encoder file: malformed line " + std::to_string(line_no));
        f.levels.push_back(unescape_field(lf[1], line_no));
      }
      e.features.push_back(std::move(f));
    } else {
      throw std::runtime_error("encoder file: unknown keyword on line " +
                               std::to_string(line_no));
    }
  }
  if (!saw_threshold || !saw_buckets)
    throw std::runtime_error("encoder file: missing threshold or buckets");
  if (!power_of_two(e.hash_buckets))
    throw std::runtime_error("encoder file: buckets must be a power of two");
  return e;
}

}  // namespace adpred
