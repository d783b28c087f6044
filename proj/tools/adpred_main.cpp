#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adpred/csv.hpp"
#include "adpred/eval.hpp"
#include "adpred/parallel.hpp"
#include "adpred/pipeline.hpp"
#include "adpred/selectors.hpp"
#include "adpred/synth.hpp"
#include "adpred/text.hpp"

namespace {

using namespace adpred;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("cannot write file: " + path);
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

InformativeSpec parse_informative(const std::string& text) {
  InformativeSpec spec;
  for (const auto& tok : split_commas(text)) {
    double lift = 0.0;
    if (!try_parse_double(tok, lift))
      throw UsageError("--informative expects comma-separated lifts, got '" + text + "'");
    spec.lifts.push_back(lift);
  }
  spec.cardinality = spec.lifts.size();
  return spec;
}

std::vector<std::size_t> parse_cardinalities(const std::string& text) {
  std::vector<std::size_t> out;
  if (text.empty()) return out;
  for (const auto& tok : split_commas(text)) {
    std::uint64_t card = 0;
    if (!try_parse_u64(tok, card))
      throw UsageError("--noise expects comma-separated cardinalities, got '" + text + "'");
    out.push_back(static_cast<std::size_t>(card));
  }
  return out;
}

std::string truth_path(const std::string& csv_path) {
  std::string base = csv_path;
  if (base.size() > 4 && base.substr(base.size() - 4) == ".csv")
    base.resize(base.size() - 4);
  return base + ".truth.tsv";
}

const std::vector<std::string> kSelectorNames = {"chi2", "p_adj", "p_adj_soft", "mi", "mi_adj"};
const std::vector<std::string> kMetricNames = {"acc", "tpr", "ppv", "f1", "auc_pr"};

struct PipelineFlags {
  std::string selector = "p_adj";
  bool no_select = false;
  std::size_t top_k = 20;
  double alpha = 0.05;
  int bins = 10;
  std::size_t trees = 100;
  std::size_t min_leaf = 1;
  std::size_t max_depth = 0;
  std::size_t mtry = 0;
  std::size_t card_threshold = 256;
  std::size_t hash_buckets = std::size_t{1} << 18;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

void add_selection_options(CLI::App* cmd, PipelineFlags& f) {
  cmd->add_option("--selector", f.selector, "feature selector")
      ->check(CLI::IsMember(kSelectorNames))
      ->capture_default_str();
  cmd->add_option("--k", f.top_k, "keep at most this many features")->capture_default_str();
  cmd->add_option("--alpha", f.alpha, "significance level for critical values")
      ->capture_default_str();
  cmd->add_option("--bins", f.bins, "equal-frequency bins for numeric features")
      ->capture_default_str();
}

void add_pipeline_options(CLI::App* cmd, PipelineFlags& f) {
  add_selection_options(cmd, f);
  cmd->add_flag("--no-select", f.no_select, "skip selection and use every feature");
  cmd->add_option("--trees", f.trees, "number of trees")->capture_default_str();
  cmd->add_option("--min-leaf", f.min_leaf, "minimum samples per leaf")->capture_default_str();
  cmd->add_option("--max-depth", f.max_depth, "tree depth cap (0 = unlimited)")
      ->capture_default_str();
  cmd->add_option("--mtry", f.mtry, "columns tried per split (0 = sqrt of total)")
      ->capture_default_str();
  cmd->add_option("--card-threshold", f.card_threshold,
                  "distinct-level count beyond which a feature is hashed")
      ->capture_default_str();
  cmd->add_option("--hash-buckets", f.hash_buckets, "bucket count for hashed features")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "random seed")->required();
  cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)")
      ->capture_default_str();
}

PipelineConfig to_pipeline_config(const PipelineFlags& f) {
  PipelineConfig cfg;
  cfg.use_selection = !f.no_select;
  cfg.selector = selector_from_name(f.selector);
  cfg.selection.top_k = f.top_k;
  cfg.selection.alpha = f.alpha;
  cfg.selection.numeric_bins = f.bins;
  cfg.cardinality_threshold = f.card_threshold;
  cfg.hash_buckets = f.hash_buckets;
  cfg.forest.n_trees = f.trees;
  cfg.forest.min_samples_leaf = f.min_leaf;
  cfg.forest.max_depth = f.max_depth;
  cfg.forest.features_per_split = f.mtry;
  cfg.forest.seed = f.seed;
  cfg.decision_threshold = f.threshold;
  cfg.threads = resolve_threads(f.threads);
  return cfg;
}

Dataset load_labeled(const std::string& path, const std::string& label) {
  CsvOptions opts;
  opts.label = label;
  return load_csv(path, opts);
}

// the five-column metric table printed by `evaluate`
std::string metric_table(const std::vector<EvalReport>& reports) {
  double acc = 0.0, tpr = 0.0, ppv = 0.0, f1 = 0.0, auc = 0.0;
  std::size_t ok = 0;
  for (const auto& r : reports) {
    if (r.failed) continue;
    acc += r.metrics.acc;
    tpr += r.metrics.tpr;
    ppv += r.metrics.ppv;
    f1 += r.metrics.f1;
    auc += r.auc_pr;
    ++ok;
  }
  if (ok == 0) throw std::runtime_error("no fold produced a usable report");
  auto d = static_cast<double>(ok);
  std::ostringstream out;
  out << "ACC\tTPR\tPPV\tF1-SCORE\tAUC-PR\n"
      << shortest_double(acc / d) << '\t' << shortest_double(tpr / d) << '\t'
      << shortest_double(ppv / d) << '\t' << shortest_double(f1 / d) << '\t'
      << shortest_double(auc / d) << '\n';
  return out.str();
}

double metric_value(const EvalReport& r, const std::string& metric) {
  if (metric == "acc") return r.metrics.acc;
  if (metric == "tpr") return r.metrics.tpr;
  if (metric == "ppv") return r.metrics.ppv;
  if (metric == "f1") return r.metrics.f1;
  if (metric == "auc_pr") return r.auc_pr;
  throw UsageError("unknown metric: " + metric);
}

void run_generate(const std::string& out, std::size_t rows, double rate,
                  const std::vector<std::string>& informative, const std::string& noise,
                  bool id_feature, std::uint64_t seed, std::size_t threads) {
  SynthConfig cfg;
  cfg.n_rows = rows;
  cfg.positive_rate = rate;
  for (const auto& spec : informative) cfg.informative.push_back(parse_informative(spec));
  cfg.noise_cardinalities = parse_cardinalities(noise);
  cfg.id_feature = id_feature;
  cfg.seed = seed;
  auto d = generate(cfg, resolve_threads(threads));
  write_csv(d, out);
  spill(truth_path(out), truth_sidecar(cfg));
  std::size_t positives = 0;
  for (auto c : d.label().codes) positives += static_cast<std::size_t>(c);
  std::cout << "wrote " << d.n_rows << " rows (" << positives << " positive), "
            << d.feature_count() << " features to " << out << "\n";
}

void run_select(const std::string& input, const std::string& label, const PipelineFlags& f,
                const std::string& out) {
  auto d = load_labeled(input, label);
  auto [clean, report] = preprocess(d, {});
  SelectorConfig sc;
  sc.top_k = f.top_k;
  sc.alpha = f.alpha;
  sc.numeric_bins = f.bins;
  auto scores = rank_features(clean, selector_from_name(f.selector), sc);
  spill(out, scores_to_tsv(scores));
  std::size_t kept = 0;
  for (const auto& s : scores) kept += s.keep ? 1 : 0;
  std::cout << "scored " << scores.size() << " features with " << f.selector << "; kept "
            << kept << " -> " << out << "\n";
}

void run_train(const std::string& input, const std::string& label, const PipelineFlags& f,
               const std::string& model_out, const std::string& scores_out) {
  auto d = load_labeled(input, label);
  auto cfg = to_pipeline_config(f);
  auto fp = fit_pipeline(d, cfg);
  spill(model_out, model_to_text(fp));
  if (!scores_out.empty()) {
    if (!cfg.use_selection) throw UsageError("--scores requires selection (drop --no-select)");
    spill(scores_out, scores_to_tsv(fp.scores));
  }
  std::cout << "trained " << fp.model.trees.size() << " trees on " << fp.model.n_cols
            << " encoded columns (" << fp.encoder.features.size() << " features) -> "
            << model_out << "\n";
}

void run_evaluate(const std::string& input, const std::string& label,
                  const std::string& model_in, bool cv, std::size_t folds, std::size_t repeats,
                  const PipelineFlags& f, const std::string& out, const std::string& pr_out) {
  if (cv == !model_in.empty())
    throw UsageError("evaluate needs exactly one of --model or --cv");
  if (cv && !pr_out.empty()) throw UsageError("--pr requires --model");

  auto d = load_labeled(input, label);
  std::vector<EvalReport> reports;
  if (cv) {
    auto cfg = to_pipeline_config(f);
    reports = cross_validate(d, folds, repeats, f.seed, [&](const Dataset& tr, const Dataset& te) {
      return run_pipeline_fold(tr, te, cfg);
    });
    std::size_t failed = 0;
    for (const auto& r : reports) failed += r.failed ? 1 : 0;
    if (failed > 0)
      std::cerr << "warning: " << failed << " of " << reports.size() << " folds failed\n";
  } else {
    auto fp = model_from_text(slurp(model_in));
    auto scores = pipeline_scores(fp, d, resolve_threads(f.threads));
    reports.push_back(evaluate_scores(d.label().codes, scores, f.threshold));
    if (!pr_out.empty()) spill(pr_out, pr_points_to_tsv(pr_curve_auc(d.label().codes, scores)));
  }
  if (!out.empty()) spill(out, reports_to_tsv(reports));
  std::cout << metric_table(reports);
}

void run_compare(const std::vector<std::string>& inputs, const std::string& metric,
                 const std::string& out) {
  if (inputs.size() < 2) throw UsageError("--inputs needs at least two report files");
  std::vector<std::vector<EvalReport>> sets;
  for (const auto& path : inputs) sets.push_back(reports_from_tsv(slurp(path)));
  for (std::size_t i = 1; i < sets.size(); ++i)
    if (sets[i].size() != sets[0].size())
      throw std::runtime_error("mismatched repeat counts: " + inputs[0] + " has " +
                               std::to_string(sets[0].size()) + " rows, " + inputs[i] +
                               " has " + std::to_string(sets[i].size()));

  auto paired = [&](std::size_t i, std::size_t j) {
    std::vector<double> a, b;
    for (std::size_t r = 0; r < sets[i].size(); ++r) {
      if (sets[i][r].failed || sets[j][r].failed) continue;
      a.push_back(metric_value(sets[i][r], metric));
      b.push_back(metric_value(sets[j][r], metric));
    }
    if (a.empty())
      throw std::runtime_error("no comparable rows between " + inputs[i] + " and " + inputs[j]);
    return wilcoxon_signed_rank(a, b).p;
  };

  std::vector<std::vector<double>> p(inputs.size(), std::vector<double>(inputs.size(), 1.0));
  for (std::size_t i = 0; i < inputs.size(); ++i)
    for (std::size_t j = i; j < inputs.size(); ++j) {
      p[i][j] = paired(i, j);
      p[j][i] = p[i][j];
    }

  std::ostringstream table;
  table << "file";
  for (const auto& path : inputs) table << '\t' << escape_field(path);
  table << '\n';
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    table << escape_field(inputs[i]);
    for (std::size_t j = 0; j < inputs.size(); ++j) table << '\t' << shortest_double(p[i][j]);
    table << '\n';
  }
  if (out.empty())
    std::cout << table.str();
  else
    spill(out, table.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event-prediction toolkit: synthesize data, select features, train and "
               "evaluate a random forest"};
  app.set_version_flag("--version", std::string(ADPRED_VERSION));
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "key=value config file with [subcommand] sections; flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  auto* gen = app.add_subcommand("generate", "write a seeded synthetic event dataset");
  gen->fallthrough(true);
  std::string gen_out;
  std::size_t gen_rows = 100000;
  double gen_rate = 0.005;
  std::vector<std::string> gen_informative;
  std::string gen_noise = "2,10,100,10000,50000";
  bool gen_id = false;
  std::uint64_t gen_seed = 0;
  std::size_t gen_threads = 0;
  gen->add_option("--out", gen_out, "output CSV path; truth sidecar lands next to it")
      ->required();
  gen->add_option("--rows", gen_rows, "row count")->capture_default_str();
  gen->add_option("--rate", gen_rate, "base positive rate")->capture_default_str();
  gen->add_option("--informative", gen_informative,
                  "informative feature as comma-separated per-level odds lifts; repeatable");
  gen->add_option("--noise", gen_noise, "noise feature cardinalities, comma-separated")
      ->capture_default_str();
  gen->add_flag("--id", gen_id, "add a near-unique id feature");
  gen->add_option("--seed", gen_seed, "random seed")->required();
  gen->add_option("--threads", gen_threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  gen->callback([&] {
    run_generate(gen_out, gen_rows, gen_rate, gen_informative, gen_noise, gen_id, gen_seed,
                 gen_threads);
  });

  auto* sel = app.add_subcommand("select", "rank features against the label");
  sel->fallthrough(true);
  std::string sel_input, sel_label = "y", sel_out;
  PipelineFlags sel_flags;
  sel->add_option("--input", sel_input, "input CSV")->required();
  sel->add_option("--label", sel_label, "label column name")->capture_default_str();
  add_selection_options(sel, sel_flags);
  sel->add_option("--out", sel_out, "score TSV path")->required();
  sel->callback([&] { run_select(sel_input, sel_label, sel_flags, sel_out); });

  auto* tr = app.add_subcommand("train", "fit the full pipeline and save the model");
  tr->fallthrough(true);
  std::string tr_input, tr_label = "y", tr_model, tr_scores;
  PipelineFlags tr_flags;
  tr->add_option("--input", tr_input, "training CSV")->required();
  tr->add_option("--label", tr_label, "label column name")->capture_default_str();
  add_pipeline_options(tr, tr_flags);
  tr->add_option("--model", tr_model, "model output path")->required();
  tr->add_option("--scores", tr_scores, "also write the selection score TSV here");
  tr->callback([&] { run_train(tr_input, tr_label, tr_flags, tr_model, tr_scores); });

  auto* ev = app.add_subcommand("evaluate",
                                "score a saved model on a holdout, or cross-validate");
  ev->fallthrough(true);
  std::string ev_input, ev_label = "y", ev_model, ev_out, ev_pr;
  bool ev_cv = false;
  std::size_t ev_folds = 5, ev_repeats = 1;
  PipelineFlags ev_flags;
  ev->add_option("--input", ev_input, "evaluation CSV")->required();
  ev->add_option("--label", ev_label, "label column name")->capture_default_str();
  ev->add_option("--model", ev_model, "saved model to score (holdout mode)");
  ev->add_flag("--cv", ev_cv, "stratified cross-validation mode");
  ev->add_option("--folds", ev_folds, "folds per repetition")->capture_default_str();
  ev->add_option("--repeats", ev_repeats, "cross-validation repetitions")
      ->capture_default_str();
  add_pipeline_options(ev, ev_flags);
  ev->add_option("--threshold", ev_flags.threshold, "decision threshold on the vote fraction")
      ->capture_default_str();
  ev->add_option("--out", ev_out, "per-fold report TSV path");
  ev->add_option("--pr", ev_pr, "precision-recall point TSV path (holdout mode)");
  ev->callback([&] {
    run_evaluate(ev_input, ev_label, ev_model, ev_cv, ev_folds, ev_repeats, ev_flags, ev_out,
                 ev_pr);
  });

  auto* cmp = app.add_subcommand("compare",
                                 "pairwise signed-rank test over per-fold report files");
  cmp->fallthrough(true);
  std::vector<std::string> cmp_inputs;
  std::string cmp_metric = "auc_pr", cmp_out;
  cmp->add_option("--inputs", cmp_inputs, "two or more report TSV files")->required();
  cmp->add_option("--metric", cmp_metric, "metric column to compare")
      ->check(CLI::IsMember(kMetricNames))
      ->capture_default_str();
  cmp->add_option("--out", cmp_out, "p-value matrix TSV path (default: stdout)");
  cmp->callback([&] { run_compare(cmp_inputs, cmp_metric, cmp_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "adpred: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "adpred: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
