#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adpred/dataset.hpp"

namespace adpred {

// How a fitted feature is materialized in the encoded matrix.
//   one_hot: one indicator column per level seen at fit; unseen/missing -> all zeros.
//   hashed:  levels seen at fit contribute +1 to bucket
//            FNV-1a-64(feature_name + "=" + level) mod hash_buckets;
//            unseen/missing contribute nothing (the reserved index 0).
//   numeric: one column, min-max scaled to [0,1] with clipping.
enum class EncodingKind { one_hot, hashed, numeric };

struct FittedFeature {
  std::string name;
  EncodingKind kind = EncodingKind::one_hot;
  // Levels seen at fit, most frequent first, ties broken by level name.
  // For one_hot this order is the column order inside the block.
  std::vector<std::string> levels;
  // numeric only
  double min = 0.0;
  double max = 0.0;
};

struct EncoderSpec {
  std::size_t cardinality_threshold = 256;
  std::size_t hash_buckets = std::size_t{1} << 18;  // must be a power of two
  std::vector<FittedFeature> features;
};

// Contiguous run of matrix columns produced by one source feature.
struct ColumnBlock {
  std::string feature;
  EncodingKind kind = EncodingKind::one_hot;
  std::size_t offset = 0;
  std::size_t width = 0;
};

// Row-major sparse matrix (CSR); absent entries are zero.  Column indices
// are strictly ascending within each row.
struct EncodedMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<ColumnBlock> blocks;
  std::vector<std::size_t> row_ptr;  // n_rows + 1
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  double at(std::size_t row, std::size_t col) const;
  // "name=level" (one hot), "name#bucket" (hashed), "name" (numeric)
  std::string describe_column(std::size_t col) const;
};

// Column-major companion built on demand for per-column scans.
struct CscMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::size_t> col_ptr;  // n_cols + 1
  std::vector<std::size_t> row_idx;
  std::vector<double> values;
};

CscMatrix to_csc(const EncodedMatrix& m);

std::uint64_t fnv1a64(std::string_view s);

// Learns per-feature encoding state from the feature columns of d.
// Categorical features with more than cardinality_threshold distinct observed
// levels are hashed, the rest one-hot encoded; numeric features record their
// observed (min, max).  Throws std::domain_error on invalid parameters
// (threshold < 1, hash_buckets not a power of two).
EncoderSpec fit_encoder(const Dataset& d, std::size_t cardinality_threshold = 256,
                        std::size_t hash_buckets = std::size_t{1} << 18);

// Applies fitted state without updating it.  Columns of d that were never
// fitted (for example the label) are ignored; a fitted feature missing from d
// or present with the wrong kind throws std::runtime_error ("schema
// mismatch...").  Missing numeric values are rejected the same way.
EncodedMatrix transform(const Dataset& d, const EncoderSpec& e);

// (min, max) over non-missing entries; (0, 0) when there are none.
std::pair<double, double> fit_min_max(const std::vector<double>& v);

// v -> (v - min)/(max - min), clipped to [0,1]; all zeros when max == min.
double min_max_scale(double v, double min, double max);
std::vector<double> min_max_scale(const std::vector<double>& v, double min, double max);

// UTF-8 text persistence; load(save(e)) reproduces e bit-exactly (bounds kept
// as hexfloats).  Malformed input throws std::runtime_error.
std::string encoder_to_text(const EncoderSpec& e);
EncoderSpec encoder_from_text(const std::string& text);

}  // namespace adpred
