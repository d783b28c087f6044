#pragma once

#include <map>
#include <optional>
#include <string>

#include "adpred/dataset.hpp"

namespace adpred {

struct CsvOptions {
  // Forces the kind of named columns instead of inferring it.
  std::map<std::string, ColumnKind> schema_hints;
  // When set, that column is coerced to a binary categorical label with
  // levels {0, 1}; loading fails if it is absent or holds other values.
  std::optional<std::string> label;
};

// RFC-4180 reader: quoted fields, doubled quotes, embedded separators and
// newlines, CRLF or LF row ends. A header row is required. Empty fields are
// missing. Columns where every non-missing cell parses fully as a float are
// numeric, everything else is categorical. Errors carry the 1-based line
// number where the offending record starts.
Dataset load_csv(const std::string& path, const CsvOptions& opts = {});

// Writes a dataset back out with RFC-4180 quoting; numeric cells use the
// shortest round-trip decimal form and missing cells are empty.
void write_csv(const Dataset& d, const std::string& path);

}  // namespace adpred
