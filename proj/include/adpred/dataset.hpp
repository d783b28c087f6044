#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace adpred {

enum class ColumnKind { categorical, numeric };
enum class ColumnRole { feature, label };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;
  ColumnRole role = ColumnRole::feature;
};

// Missing cells: numeric columns hold one canonical quiet-NaN bit pattern
// (normalized on ingest so bitwise row comparison stays meaningful),
// categorical columns hold code -1.
inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }
inline bool is_missing(double v) { return std::isnan(v); }
inline double normalize_numeric(double v) { return std::isnan(v) ? missing_value() : v; }

constexpr std::int32_t kMissingCode = -1;

struct Column {
  ColumnSchema schema;
  std::vector<double> num;           // numeric storage
  std::vector<std::int32_t> codes;   // categorical storage
  std::vector<std::string> levels;   // categorical dictionary

  bool is_numeric() const { return schema.kind == ColumnKind::numeric; }
  std::size_t size() const { return is_numeric() ? num.size() : codes.size(); }
};

struct Dataset {
  std::vector<Column> columns;
  std::size_t n_rows = 0;
  int label_index = -1;

  bool has_label() const { return label_index >= 0; }
  const Column& label() const { return columns[static_cast<std::size_t>(label_index)]; }
  const Column* find(const std::string& name) const {
    for (const auto& c : columns)
      if (c.schema.name == name) return &c;
    return nullptr;
  }
  std::size_t feature_count() const {
    std::size_t k = 0;
    for (const auto& c : columns)
      if (c.schema.role == ColumnRole::feature) ++k;
    return k;
  }
};

// 64-bit representation used wherever exact (bitwise) numeric identity is
// needed, e.g. duplicate-row detection.
inline std::uint64_t numeric_bits(double v) {
  std::uint64_t u;
  static_assert(sizeof(u) == sizeof(v));
  __builtin_memcpy(&u, &v, sizeof(u));
  return u;
}

}  // namespace adpred
