#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "adpred/csv.hpp"
#include "adpred/dataset.hpp"
#include "adpred/preprocess.hpp"

using namespace adpred;

namespace {

std::string temp_file(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / "adpred_tabular_tests";
  std::filesystem::create_directories(dir);
  return (dir / (tag + ".csv")).string();
}

std::string write_text(const std::string& tag, const std::string& content) {
  std::string path = temp_file(tag);
  std::ofstream out(path, std::ios::binary);
  out << content;
  out.close();
  return path;
}

Column num_col(std::string name, std::vector<double> v) {
  Column c;
  c.schema = {std::move(name), ColumnKind::numeric, ColumnRole::feature};
  c.num = std::move(v);
  return c;
}

Column cat_col(std::string name, std::vector<std::string> levels,
               std::vector<std::int32_t> codes) {
  Column c;
  c.schema = {std::move(name), ColumnKind::categorical, ColumnRole::feature};
  c.levels = std::move(levels);
  c.codes = std::move(codes);
  return c;
}

Column label_col(std::vector<std::int32_t> codes) {
  Column c;
  c.schema = {"label", ColumnKind::categorical, ColumnRole::label};
  c.levels = {"0", "1"};
  c.codes = std::move(codes);
  return c;
}

Dataset make_dataset(std::vector<Column> cols) {
  Dataset d;
  d.columns = std::move(cols);
  d.n_rows = d.columns.empty() ? 0 : d.columns[0].size();
  for (std::size_t i = 0; i < d.columns.size(); ++i)
    if (d.columns[i].schema.role == ColumnRole::label) d.label_index = static_cast<int>(i);
  return d;
}

bool datasets_identical(const Dataset& a, const Dataset& b) {
  if (a.n_rows != b.n_rows || a.label_index != b.label_index ||
      a.columns.size() != b.columns.size())
    return false;
  for (std::size_t c = 0; c < a.columns.size(); ++c) {
    const Column &x = a.columns[c], &y = b.columns[c];
    if (x.schema.name != y.schema.name || x.schema.kind != y.schema.kind ||
        x.schema.role != y.schema.role)
      return false;
    if (x.levels != y.levels || x.codes != y.codes) return false;
    if (x.num.size() != y.num.size()) return false;
    for (std::size_t r = 0; r < x.num.size(); ++r)
      if (numeric_bits(x.num[r]) != numeric_bits(y.num[r])) return false;
  }
  return true;
}

bool report_empty(const CleaningReport& r) {
  return r.duplicate_rows_removed == 0 && r.rows_dropped_missing_label == 0 &&
         r.rows_dropped_missing_numeric == 0 && r.imputed_median.empty() &&
         r.imputed_missing_token.empty() && r.dropped_columns.empty();
}

std::string cat_at(const Column& c, std::size_t r) {
  REQUIRE(c.codes[r] != kMissingCode);
  return c.levels[static_cast<std::size_t>(c.codes[r])];
}

}  // namespace

TEST_CASE("csv quoting: embedded commas, escaped quotes, newlines, crlf") {
  std::string path = write_text("quoting",
                                "name,note,x\r\n"
                                "\"a,1\",\"he said \"\"hi\"\"\",3\r\n"
                                "\"multi\nline\",plain,4\r\n");
  Dataset d = load_csv(path);
  REQUIRE(d.n_rows == 2);
  REQUIRE(d.columns.size() == 3);
  CHECK(cat_at(d.columns[0], 0) == "a,1");
  CHECK(cat_at(d.columns[1], 0) == "he said \"hi\"");
  CHECK(cat_at(d.columns[0], 1) == "multi\nline");
  CHECK(d.columns[2].is_numeric());
  CHECK(d.columns[2].num[0] == 3.0);
  CHECK(d.columns[2].num[1] == 4.0);
}

TEST_CASE("csv type inference and missing cells") {
  std::string path = write_text("infer",
                                "a,b,c,d\n"
                                "1,1,x,12 \n"
                                "2.5,,1e3,7\n"
                                ",nan,2,8\n");
  Dataset d = load_csv(path);
  CHECK(d.columns[0].is_numeric());
  CHECK(is_missing(d.columns[0].num[2]));
  CHECK(d.columns[0].num[1] == 2.5);
  // "nan" parses as a float, then normalizes to the missing marker
  CHECK(d.columns[1].is_numeric());
  CHECK(is_missing(d.columns[1].num[1]));
  CHECK(is_missing(d.columns[1].num[2]));
  // "x" forces categorical; numerals in a categorical column stay strings
  CHECK(!d.columns[2].is_numeric());
  CHECK(cat_at(d.columns[2], 1) == "1e3");
  // trailing blank makes "12 " unparseable as a full float
  CHECK(!d.columns[3].is_numeric());
}

TEST_CASE("schema hints override inference; unknown hint rejected") {
  std::string path = write_text("hints", "a,b\n1,2\n3,4\n");
  CsvOptions opts;
  opts.schema_hints["a"] = ColumnKind::categorical;
  Dataset d = load_csv(path, opts);
  CHECK(!d.columns[0].is_numeric());
  CHECK(cat_at(d.columns[0], 1) == "3");
  CHECK(d.columns[1].is_numeric());

  CsvOptions bad;
  bad.schema_hints["zzz"] = ColumnKind::numeric;
  CHECK_THROWS_WITH_AS(load_csv(path, bad),
                       doctest::Contains("schema hint references unknown column"),
                       std::runtime_error);
}

TEST_CASE("ragged rows are rejected with the offending line") {
  std::string path = write_text("ragged", "a,b\n1,2\n3\n");
  try {
    load_csv(path);
    FAIL("expected ragged-row error");
  } catch (const std::runtime_error& e) {
    std::string msg = e.what();
    CHECK(msg.find(":3:") != std::string::npos);
    CHECK(msg.find("ragged") != std::string::npos);
  }
}

TEST_CASE("label coercion to binary categorical") {
  std::string path = write_text("label", "x,y\n5,1\n6,0\n7,\n");
  CsvOptions opts;
  opts.label = "y";
  Dataset d = load_csv(path, opts);
  REQUIRE(d.has_label());
  const Column& y = d.label();
  CHECK(y.schema.role == ColumnRole::label);
  CHECK(y.schema.kind == ColumnKind::categorical);
  CHECK(y.levels == std::vector<std::string>{"0", "1"});
  CHECK(y.codes == std::vector<std::int32_t>{1, 0, kMissingCode});

  CsvOptions missing;
  missing.label = "nope";
  CHECK_THROWS_WITH_AS(load_csv(path, missing), doctest::Contains("label column not found"),
                       std::runtime_error);

  std::string bad = write_text("label_bad", "x,y\n5,2\n");
  CsvOptions opts2;
  opts2.label = "y";
  CHECK_THROWS_WITH_AS(load_csv(bad, opts2), doctest::Contains("must be binary"),
                       std::runtime_error);
}

TEST_CASE("duplicate column names rejected") {
  std::string path = write_text("dupcol", "a,a\n1,2\n");
  CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("duplicate column name"),
                       std::runtime_error);
}

TEST_CASE("write then load preserves values") {
  Dataset d = make_dataset({
      cat_col("s", {"a,1", "he said \"hi\"", "multi\nline"}, {0, 1, 2, 0}),
      num_col("v", {1.5, missing_value(), -3.25, 1e300}),
      label_col({0, 1, 1, kMissingCode}),
  });
  std::string path = temp_file("roundtrip");
  write_csv(d, path);
  CsvOptions opts;
  opts.label = "label";
  Dataset back = load_csv(path, opts);
  REQUIRE(back.n_rows == 4);
  CHECK(cat_at(back.columns[0], 0) == "a,1");
  CHECK(cat_at(back.columns[0], 1) == "he said \"hi\"");
  CHECK(cat_at(back.columns[0], 2) == "multi\nline");
  CHECK(back.columns[1].num[0] == 1.5);
  CHECK(is_missing(back.columns[1].num[1]));
  CHECK(back.columns[1].num[2] == -3.25);
  CHECK(back.columns[1].num[3] == 1e300);
  CHECK(back.label().codes == std::vector<std::int32_t>{0, 1, 1, kMissingCode});
}

TEST_CASE("preprocess removes exact duplicates, keeping first occurrence") {
  Dataset d = make_dataset({
      num_col("v", {1.0, missing_value(), 1.0, missing_value(), 2.0}),
      cat_col("s", {"a", "b"}, {0, 1, 0, 1, 0}),
      label_col({1, 0, 1, 0, 1}),
  });
  auto [out, rep] = preprocess(d);
  CHECK(rep.duplicate_rows_removed == 2);
  CHECK(out.n_rows == 3);
  // dedup collapses rows first, so the median is over the surviving {1, 2}
  CHECK(rep.imputed_median.at("v") == 1);
  CHECK(out.columns[0].num[1] == 1.5);
}

TEST_CASE("rows with missing labels are dropped") {
  Dataset d = make_dataset({
      num_col("v", {1, 2, 3, 4}),
      label_col({1, kMissingCode, 0, kMissingCode}),
  });
  auto [out, rep] = preprocess(d);
  CHECK(rep.rows_dropped_missing_label == 2);
  CHECK(out.n_rows == 2);
  CHECK(out.columns[0].num == std::vector<double>{1, 3});
}

TEST_CASE("median imputation matches a sort-based oracle") {
  std::mt19937 rng(7);
  for (int rep_i = 0; rep_i < 20; ++rep_i) {
    std::size_t n = 3 + rng() % 12;
    std::vector<double> vals;
    std::vector<double> present;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng() % 4 == 0) {
        vals.push_back(missing_value());
      } else {
        double v = static_cast<double>(static_cast<int>(rng() % 19) - 9) * 0.5;
        vals.push_back(v);
        present.push_back(v);
      }
    }
    if (present.size() < 2) continue;
    bool has_missing = present.size() != vals.size();
    std::sort(present.begin(), present.end());
    double want = present.size() % 2 ? present[present.size() / 2]
                                     : 0.5 * (present[present.size() / 2 - 1] +
                                              present[present.size() / 2]);
    // anchor column keeps rows distinct so dedup stays out of the picture
    std::vector<std::int32_t> anchor_codes;
    std::vector<std::string> anchor_levels;
    for (std::size_t i = 0; i < n; ++i) {
      anchor_levels.push_back("r" + std::to_string(i));
      anchor_codes.push_back(static_cast<std::int32_t>(i));
    }
    Dataset d = make_dataset({
        cat_col("anchor", anchor_levels, anchor_codes),
        num_col("v", vals),
        label_col(std::vector<std::int32_t>(n, 1)),
    });
    auto [out, rep] = preprocess(d);
    if (!has_missing) continue;
    CAPTURE(rep_i);
    for (std::size_t i = 0; i < n; ++i) {
      if (is_missing(vals[i])) CHECK(out.columns[1].num[i] == want);
    }
  }
}

TEST_CASE("categorical missing becomes the sentinel token") {
  Dataset d = make_dataset({
      cat_col("s", {"a", "b"}, {0, kMissingCode, 1, kMissingCode}),
      num_col("v", {1, 2, 3, 4}),
      label_col({0, 1, 0, 1}),
  });
  auto [out, rep] = preprocess(d);
  CHECK(rep.imputed_missing_token.at("s") == 2);
  CHECK(cat_at(out.columns[0], 1) == "__MISSING__");
  CHECK(cat_at(out.columns[0], 3) == "__MISSING__");

  PreprocessConfig cfg;
  cfg.categorical_missing_token = "(none)";
  auto [out2, rep2] = preprocess(d, cfg);
  CHECK(cat_at(out2.columns[0], 1) == "(none)");
}

TEST_CASE("variance and single-level pruning") {
  Dataset d = make_dataset({
      num_col("const", {2, 2, 2, 2}),
      num_col("nearly", {0, 0.1, 0, 0.1}),
      num_col("alive", {0, 5, 9, 1}),
      cat_col("mono", {"only"}, {0, 0, 0, 0}),
      cat_col("duo", {"a", "b"}, {0, 1, 0, 1}),
      label_col({0, 1, 0, 1}),
  });
  auto [out, rep] = preprocess(d);
  CHECK(out.find("const") == nullptr);
  CHECK(out.find("mono") == nullptr);
  CHECK(out.find("nearly") != nullptr);
  CHECK(out.find("alive") != nullptr);
  CHECK(out.find("duo") != nullptr);
  CHECK(out.has_label());

  PreprocessConfig cfg;
  cfg.variance_epsilon = 0.01;  // variance of {0,.1,0,.1} is 0.0025
  auto [out2, rep2] = preprocess(d, cfg);
  CHECK(out2.find("nearly") == nullptr);
  CHECK(out2.find("alive") != nullptr);
}

TEST_CASE("drop_row policy removes rows with missing numerics") {
  PreprocessConfig cfg;
  cfg.numeric_impute = NumericImpute::drop_row;
  Dataset d = make_dataset({
      num_col("v", {1, missing_value(), 3}),
      cat_col("s", {"a", "b", "c"}, {0, 1, 2}),
      label_col({0, 1, 1}),
  });
  auto [out, rep] = preprocess(d, cfg);
  CHECK(rep.rows_dropped_missing_numeric == 1);
  CHECK(out.n_rows == 2);
  CHECK(out.columns[0].num == std::vector<double>{1, 3});
}

TEST_CASE("preprocess fails when nothing survives") {
  Dataset d = make_dataset({
      num_col("const", {1, 1, 1}),
      label_col({0, 1, 0}),
  });
  CHECK_THROWS_WITH_AS(preprocess(d), "no features survive preprocessing",
                       std::runtime_error);
}

TEST_CASE("preprocess is idempotent on randomized inputs") {
  std::mt19937 rng(1234);
  for (int case_i = 0; case_i < 60; ++case_i) {
    std::size_t n = 2 + rng() % 24;
    auto rnum = [&]() -> double {
      switch (rng() % 5) {
        case 0: return missing_value();
        case 1: return 0.0;
        case 2: return 1.0;
        case 3: return 0.05;
        default: return 2.5;
      }
    };
    std::vector<double> v1, v2;
    std::vector<std::int32_t> c1, y;
    for (std::size_t i = 0; i < n; ++i) {
      v1.push_back(rnum());
      v2.push_back(rnum());
      c1.push_back(rng() % 5 == 0 ? kMissingCode : static_cast<std::int32_t>(rng() % 3));
      y.push_back(rng() % 6 == 0 ? kMissingCode : static_cast<std::int32_t>(rng() % 2));
    }
    Dataset d = make_dataset({
        num_col("v1", v1),
        num_col("v2", v2),
        cat_col("c1", {"a", "b", "c"}, c1),
        label_col(y),
    });
    PreprocessConfig cfg;
    cfg.variance_epsilon = (case_i % 3 == 0) ? 0.1 : 0.0;
    cfg.numeric_impute = (case_i % 2 == 0) ? NumericImpute::median : NumericImpute::drop_row;
    Dataset first;
    try {
      auto [out, rep] = preprocess(d, cfg);
      first = std::move(out);
    } catch (const std::runtime_error&) {
      continue;  // everything pruned; nothing to assert
    }
    auto [second, rep2] = preprocess(first, cfg);
    CAPTURE(case_i);
    CHECK(report_empty(rep2));
    CHECK(datasets_identical(first, second));
  }
}

TEST_CASE("cleaning report serializes action/column/count lines") {
  Dataset d = make_dataset({
      num_col("v", {1, 1, missing_value(), 4}),
      num_col("const", {7, 7, 7, 7}),
      cat_col("s", {"a", "b"}, {0, kMissingCode, 1, 1}),
      label_col({0, kMissingCode, 1, 1}),
  });
  auto [out, rep] = preprocess(d);
  std::string tsv = rep.to_tsv();
  REQUIRE(!tsv.empty());
  std::istringstream is(tsv);
  std::string line;
  bool saw_drop = false;
  while (std::getline(is, line)) {
    auto first = line.find('\t');
    auto second = line.find('\t', first + 1);
    REQUIRE(first != std::string::npos);
    REQUIRE(second != std::string::npos);
    CHECK(line.find('\t', second + 1) == std::string::npos);
    if (line.substr(0, first) == "drop_low_variance") {
      saw_drop = true;
      CHECK(line.substr(first + 1, second - first - 1) == "const");
    }
  }
  CHECK(saw_drop);
}
