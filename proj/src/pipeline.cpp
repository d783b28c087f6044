#include "adpred/pipeline.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "adpred/text.hpp"

namespace adpred {

namespace {

Dataset keep_features(const Dataset& d, const std::vector<std::string>& names) {
  Dataset out;
  out.n_rows = d.n_rows;
  for (const auto& col : d.columns) {
    bool wanted = col.schema.role == ColumnRole::label ||
                  std::find(names.begin(), names.end(), col.schema.name) != names.end();
    if (!wanted) continue;
    if (col.schema.role == ColumnRole::label)
      out.label_index = static_cast<std::ptrdiff_t>(out.columns.size());
    out.columns.push_back(col);
  }
  return out;
}

}  // namespace

FittedPipeline fit_pipeline(const Dataset& train_raw, const PipelineConfig& cfg) {
  auto [train, report] = preprocess(train_raw, cfg.preprocess);
  if (!train.has_label()) throw std::runtime_error("fit_pipeline: dataset has no label column");

  FittedPipeline fp;
  Dataset selected = train;
  if (cfg.use_selection) {
    fp.scores = rank_features(train, cfg.selector, cfg.selection);
    std::vector<std::string> kept;
    for (const auto& s : fp.scores)
      if (s.keep) kept.push_back(s.feature);
    if (kept.empty()) throw std::runtime_error("selection kept no features");
    selected = keep_features(train, kept);
  }

  for (const auto& col : selected.columns)
    if (col.schema.role == ColumnRole::feature && col.is_numeric())
      fp.numeric_medians[col.schema.name] = median_ignoring_missing(col.num);

  fp.encoder = fit_encoder(selected, cfg.cardinality_threshold, cfg.hash_buckets);
  auto x = transform(selected, fp.encoder);
  fp.model = fit_forest(x, selected.label().codes, cfg.forest, cfg.threads);
  return fp;
}

std::vector<double> pipeline_scores(const FittedPipeline& fp, const Dataset& raw,
                                    std::size_t threads) {
  Dataset prepared = raw;
  for (auto& col : prepared.columns) {
    if (col.schema.role != ColumnRole::feature || !col.is_numeric()) continue;
    auto it = fp.numeric_medians.find(col.schema.name);
    if (it == fp.numeric_medians.end()) continue;
    for (double& v : col.num)
      if (is_missing(v)) v = it->second;
  }
  auto x = transform(prepared, fp.encoder);
  return predict_proba(fp.model, x, threads);
}

EvalReport run_pipeline_fold(const Dataset& train, const Dataset& test,
                             const PipelineConfig& cfg) {
  auto fp = fit_pipeline(train, cfg);
  auto scores = pipeline_scores(fp, test, cfg.threads);
  return evaluate_scores(test.label().codes, scores, cfg.decision_threshold);
}

std::string model_to_text(const FittedPipeline& fp) {
  std::ostringstream out;
  out << "adpred-model\t1\n";
  out << "medians\t" << fp.numeric_medians.size() << "\n";
  for (const auto& [name, value] : fp.numeric_medians)
    out << "m\t" << escape_field(name) << "\t" << hex_double(value) << "\n";
  out << encoder_to_text(fp.encoder);
  out << forest_to_text(fp.model);
  return out.str();
}

FittedPipeline model_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&] {
    if (!std::getline(in, line)) throw std::runtime_error("model file: truncated");
    ++line_no;
  };

  ++line_no;
  if (!std::getline(in, line) || line != "adpred-model\t1")
    throw std::runtime_error("not a model file (bad header)");

  next_line();
  auto mf = split_tabs(line);
  std::uint64_t count = 0;
  if (mf.size() != 2 || mf[0] != "medians" || !try_parse_u64(mf[1], count))
    throw std::runtime_error("model file: malformed line " + std::to_string(line_no));

  FittedPipeline fp;
  for (std::uint64_t i = 0; i < count; ++i) {
    next_line();
    auto f = split_tabs(line);
    std::string name;
    double value = 0.0;
    if (f.size() != 3 || f[0] != "m" || !try_unescape_field(f[1], name) ||
        !try_parse_double(f[2], value))
      throw std::runtime_error("model file: malformed line " + std::to_string(line_no));
    fp.numeric_medians[name] = value;
  }

  // the remainder is the encoder section followed by the forest section
  std::string rest;
  std::ostringstream tail;
  tail << in.rdbuf();
  rest = tail.str();
  // escaped fields cannot contain a real newline, so this match is a full line
  auto split_at = rest.find("\nadpred-forest\t1\n");
  if (split_at == std::string::npos)
    throw std::runtime_error("model file: missing forest section");
  fp.encoder = encoder_from_text(rest.substr(0, split_at + 1));
  fp.model = forest_from_text(rest.substr(split_at + 1));
  return fp;
}

}  // namespace adpred
