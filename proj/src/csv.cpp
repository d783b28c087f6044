#include "adpred/csv.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "adpred/text.hpp"

namespace adpred {
namespace {

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;  // 1-based line where each row starts
};

[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& what) {
  std::ostringstream os;
  os << path << ":" << line << ": " << what;
  throw std::runtime_error(os.str());
}

RawTable parse_rfc4180(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t i = 0;
  if (text.size() >= 3 && text.compare(0, 3, "\xef\xbb\xbf") == 0) i = 3;

  RawTable t;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool record_open = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    if (t.header.empty()) {
      t.header = std::move(record);
    } else {
      t.rows.push_back(std::move(record));
      t.row_lines.push_back(record_line);
    }
    record.clear();
    record_open = false;
  };

  for (; i < text.size(); ++i) {
    char c = text[i];
    if (!record_open) {
      record_open = true;
      record_line = line;
    }
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;  // swallowed with the \n
        ++line;
        end_record();
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(c);
    }
  }
  if (in_quotes) fail(path, record_line, "unterminated quoted field");
  if (record_open) end_record();
  if (t.header.empty()) fail(path, 1, "missing header row");
  return t;
}

bool parse_full_double(const std::string& s, double* out) {
  if (s.empty()) return false;
  const char* c = s.c_str();
  char* end = nullptr;
  double v = std::strtod(c, &end);
  if (end == c || *end != '\0') return false;
  *out = v;
  return true;
}

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n\r") != std::string::npos;
}

void write_field(std::ostream& os, const std::string& s) {
  if (!needs_quoting(s)) {
    os << s;
    return;
  }
  os << '"';
  for (char c : s) {
    if (c == '"') os << '"';
    os << c;
  }
  os << '"';
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvOptions& opts) {
  RawTable raw = parse_rfc4180(path);
  const std::size_t ncol = raw.header.size();

  {
    std::unordered_set<std::string> seen;
    for (const auto& name : raw.header)
      if (!seen.insert(name).second)
        throw std::runtime_error(path + ": duplicate column name: " + name);
  }
  for (const auto& [name, kind] : opts.schema_hints) {
    (void)kind;
    if (std::find(raw.header.begin(), raw.header.end(), name) == raw.header.end())
      throw std::runtime_error(path + ": schema hint references unknown column: " + name);
  }

  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    if (raw.rows[r].size() != ncol) {
      std::ostringstream os;
      os << "ragged row (expected " << ncol << " fields, got " << raw.rows[r].size() << ")";
      fail(path, raw.row_lines[r], os.str());
    }
  }

  int label_index = -1;
  if (opts.label) {
    for (std::size_t c = 0; c < ncol; ++c)
      if (raw.header[c] == *opts.label) label_index = static_cast<int>(c);
    if (label_index < 0)
      throw std::runtime_error(path + ": label column not found: " + *opts.label);
  }

  Dataset d;
  d.n_rows = raw.rows.size();
  d.label_index = label_index;
  d.columns.resize(ncol);

  for (std::size_t c = 0; c < ncol; ++c) {
    Column& col = d.columns[c];
    col.schema.name = raw.header[c];
    col.schema.role =
        (static_cast<int>(c) == label_index) ? ColumnRole::label : ColumnRole::feature;

    ColumnKind kind;
    if (static_cast<int>(c) == label_index) {
      kind = ColumnKind::categorical;
    } else if (auto it = opts.schema_hints.find(col.schema.name);
               it != opts.schema_hints.end()) {
      kind = it->second;
    } else {
      kind = ColumnKind::numeric;
      double tmp;
      for (const auto& row : raw.rows) {
        const std::string& cell = row[c];
        if (cell.empty()) continue;
        if (!parse_full_double(cell, &tmp)) {
          kind = ColumnKind::categorical;
          break;
        }
      }
    }
    col.schema.kind = kind;

    if (static_cast<int>(c) == label_index) {
      col.levels = {"0", "1"};
      col.codes.reserve(d.n_rows);
      for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        const std::string& cell = raw.rows[r][c];
        if (cell.empty()) {
          col.codes.push_back(kMissingCode);
        } else if (cell == "0") {
          col.codes.push_back(0);
        } else if (cell == "1") {
          col.codes.push_back(1);
        } else {
          fail(path, raw.row_lines[r],
               "label column '" + col.schema.name + "' must be binary with levels {0,1}");
        }
      }
    } else if (kind == ColumnKind::numeric) {
      col.num.reserve(d.n_rows);
      for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        const std::string& cell = raw.rows[r][c];
        if (cell.empty()) {
          col.num.push_back(missing_value());
          continue;
        }
        double v;
        if (!parse_full_double(cell, &v)) {
          fail(path, raw.row_lines[r],
               "column '" + col.schema.name + "' is numeric but cell does not parse: " + cell);
        }
        col.num.push_back(normalize_numeric(v));
      }
    } else {
      std::unordered_map<std::string, std::int32_t> intern;
      col.codes.reserve(d.n_rows);
      for (const auto& row : raw.rows) {
        const std::string& cell = row[c];
        if (cell.empty()) {
          col.codes.push_back(kMissingCode);
          continue;
        }
        auto [it, inserted] =
            intern.emplace(cell, static_cast<std::int32_t>(col.levels.size()));
        if (inserted) col.levels.push_back(cell);
        col.codes.push_back(it->second);
      }
    }
  }
  return d;
}

void write_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  for (std::size_t c = 0; c < d.columns.size(); ++c) {
    if (c) out << ',';
    write_field(out, d.columns[c].schema.name);
  }
  out << '\n';
  for (std::size_t r = 0; r < d.n_rows; ++r) {
    for (std::size_t c = 0; c < d.columns.size(); ++c) {
      if (c) out << ',';
      const Column& col = d.columns[c];
      if (col.is_numeric()) {
        if (!is_missing(col.num[r])) out << shortest_double(col.num[r]);
      } else {
        if (col.codes[r] != kMissingCode)
          write_field(out, col.levels[static_cast<std::size_t>(col.codes[r])]);
      }
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace adpred
