#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adpred/chi2.hpp"
#include "adpred/csv.hpp"
#include "adpred/eval.hpp"
#include "adpred/parallel.hpp"
#include "adpred/pipeline.hpp"
#include "adpred/selectors.hpp"
#include "adpred/synth.hpp"

namespace py = pybind11;
using namespace adpred;

namespace {

using Counts = std::vector<std::vector<double>>;

Dataset load_labeled(const std::string& path, const std::string& label) {
  CsvOptions opts;
  opts.label = label;
  return load_csv(path, opts);
}

PipelineConfig make_config(const std::string& selector, bool select, std::size_t k,
                           double alpha, int bins, std::size_t trees, std::size_t min_leaf,
                           std::size_t max_depth, std::size_t mtry, std::size_t card_threshold,
                           std::size_t hash_buckets, double threshold, std::uint64_t seed,
                           std::size_t threads) {
  PipelineConfig cfg;
  cfg.use_selection = select;
  cfg.selector = selector_from_name(selector);
  cfg.selection.top_k = k;
  cfg.selection.alpha = alpha;
  cfg.selection.numeric_bins = bins;
  cfg.cardinality_threshold = card_threshold;
  cfg.hash_buckets = hash_buckets;
  cfg.forest.n_trees = trees;
  cfg.forest.min_samples_leaf = min_leaf;
  cfg.forest.max_depth = max_depth;
  cfg.forest.features_per_split = mtry;
  cfg.forest.seed = seed;
  cfg.decision_threshold = threshold;
  cfg.threads = resolve_threads(threads);
  return cfg;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["repeat"] = r.repeat;
  d["fold"] = r.fold;
  d["failed"] = r.failed;
  d["note"] = r.note;
  d["acc"] = r.metrics.acc;
  d["tpr"] = r.metrics.tpr;
  d["ppv"] = r.metrics.ppv;
  d["f1"] = r.metrics.f1;
  d["auc_pr"] = r.auc_pr;
  d["tp"] = r.confusion.tp;
  d["fn"] = r.confusion.fn;
  d["fp"] = r.confusion.fp;
  d["tn"] = r.confusion.tn;
  return d;
}

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

}  // namespace

PYBIND11_MODULE(_adpred, m) {
  m.doc() = "event-prediction core: penalized feature selection, encoding, random forest";
  m.attr("__version__") = ADPRED_VERSION;

  m.def("chi2_cdf", &chi2_cdf, py::arg("x"), py::arg("df"),
        "lower chi-squared tail probability");
  m.def("chi2_sf", &chi2_sf, py::arg("x"), py::arg("df"),
        "upper chi-squared tail probability");
  m.def("chi2_quantile", &chi2_quantile, py::arg("p"), py::arg("df"),
        "inverse of chi2_cdf in p");

  m.def("p_adj", &p_adj, py::arg("statistic"), py::arg("df"), py::arg("alpha") = 0.05,
        "(statistic - C) / C with C the (1 - alpha) chi-squared quantile");
  m.def("p_adj_soft", &p_adj_soft, py::arg("statistic"), py::arg("df"),
        py::arg("alpha") = 0.05, "(statistic - C) / ln(C); requires C > 1");

  m.def(
      "chi2_test",
      [](const Counts& counts) {
        auto r = chi2_statistic(table_from_counts(counts));
        py::dict d;
        d["statistic"] = r.statistic;
        d["df"] = r.df;
        d["p_value"] = r.p_value;
        return d;
      },
      py::arg("counts"), "independence test on an observed count matrix");
  m.def(
      "mutual_information",
      [](const Counts& counts) { return mutual_information(table_from_counts(counts)); },
      py::arg("counts"), "plug-in mutual information of a count matrix, in nats");
  m.def(
      "mi_adj",
      [](const Counts& counts, double alpha) {
        auto t = table_from_counts(counts);
        auto r = mi_adj(t, alpha);
        py::dict d;
        d["mi"] = r.mi;
        d["score"] = r.score;
        d["keep"] = r.keep;
        d["df"] = t.df;
        return d;
      },
      py::arg("counts"), py::arg("alpha") = 0.05,
      "2 n MI minus the (1 - alpha) chi-squared quantile; keep when positive");

  m.def(
      "rank_csv",
      [](const std::string& path, const std::string& label, const std::string& selector,
         std::size_t k, double alpha, int bins) {
        auto d = load_labeled(path, label);
        auto [clean, report] = preprocess(d, {});
        SelectorConfig sc;
        sc.top_k = k;
        sc.alpha = alpha;
        sc.numeric_bins = bins;
        auto scores = rank_features(clean, selector_from_name(selector), sc);
        py::list out;
        for (const auto& s : scores) {
          py::dict e;
          e["feature"] = s.feature;
          e["statistic"] = s.statistic;
          e["df"] = s.df;
          e["p_value"] = s.p_value;
          e["adjusted_score"] = s.adjusted_score;
          e["rank"] = s.rank;
          e["keep"] = s.keep;
          e["degenerate"] = s.degenerate;
          out.append(e);
        }
        return out;
      },
      py::arg("path"), py::arg("label") = "y", py::arg("selector") = "p_adj",
      py::arg("k") = 20, py::arg("alpha") = 0.05, py::arg("bins") = 10,
      "clean a CSV and rank its features against the label");

  m.def(
      "metrics_from_counts",
      [](std::size_t tp, std::size_t fn, std::size_t fp, std::size_t tn) {
        auto v = metrics(ConfusionMatrix{tp, fn, fp, tn});
        py::dict d;
        d["acc"] = v.acc;
        d["tpr"] = v.tpr;
        d["ppv"] = v.ppv;
        d["f1"] = v.f1;
        return d;
      },
      py::arg("tp"), py::arg("fn"), py::arg("fp"), py::arg("tn"),
      "accuracy (percent), recall, precision, F1 from a confusion matrix");
  m.def(
      "auc_pr",
      [](const std::vector<std::int32_t>& y_true, const std::vector<double>& scores) {
        return pr_curve_auc(y_true, scores).auc;
      },
      py::arg("y_true"), py::arg("scores"), "area under the precision-recall curve");
  m.def(
      "wilcoxon",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        auto r = wilcoxon_signed_rank(a, b);
        py::dict d;
        d["w"] = r.w;
        d["p"] = r.p;
        d["n"] = r.n;
        d["all_zero"] = r.all_zero;
        d["exact"] = r.exact;
        return d;
      },
      py::arg("a"), py::arg("b"), "paired two-sided signed-rank test");

  m.def(
      "generate_csv",
      [](const std::string& out, std::size_t rows, double rate, const Counts& informative,
         const std::vector<std::size_t>& noise, bool id_feature, std::uint64_t seed,
         std::size_t threads) {
        SynthConfig cfg;
        cfg.n_rows = rows;
        cfg.positive_rate = rate;
        for (const auto& lifts : informative)
          cfg.informative.push_back(InformativeSpec{lifts.size(), lifts});
        cfg.noise_cardinalities = noise;
        cfg.id_feature = id_feature;
        cfg.seed = seed;
        auto d = generate(cfg, resolve_threads(threads));
        write_csv(d, out);
        spill(out.size() > 4 && out.substr(out.size() - 4) == ".csv"
                  ? out.substr(0, out.size() - 4) + ".truth.tsv"
                  : out + ".truth.tsv",
              truth_sidecar(cfg));
      },
      py::arg("out"), py::arg("rows") = 100000, py::arg("rate") = 0.005,
      py::arg("informative") = Counts{}, py::arg("noise") = std::vector<std::size_t>{},
      py::arg("id_feature") = false, py::arg("seed") = 0, py::arg("threads") = 1,
      "write a seeded synthetic event dataset and its truth sidecar");

  m.def(
      "train_csv",
      [](const std::string& input, const std::string& model_out, const std::string& label,
         const std::string& selector, bool select, std::size_t k, double alpha, int bins,
         std::size_t trees, std::size_t min_leaf, std::size_t max_depth, std::size_t mtry,
         std::size_t card_threshold, std::size_t hash_buckets, std::uint64_t seed,
         std::size_t threads) {
        auto cfg = make_config(selector, select, k, alpha, bins, trees, min_leaf, max_depth,
                               mtry, card_threshold, hash_buckets, 0.5, seed, threads);
        auto fp = fit_pipeline(load_labeled(input, label), cfg);
        spill(model_out, model_to_text(fp));
        py::list kept;
        for (const auto& f : fp.encoder.features) kept.append(f.name);
        return kept;
      },
      py::arg("input"), py::arg("model_out"), py::arg("label") = "y",
      py::arg("selector") = "p_adj", py::arg("select") = true, py::arg("k") = 20,
      py::arg("alpha") = 0.05, py::arg("bins") = 10, py::arg("trees") = 100,
      py::arg("min_leaf") = 1, py::arg("max_depth") = 0, py::arg("mtry") = 0,
      py::arg("card_threshold") = 256, py::arg("hash_buckets") = std::size_t{1} << 18,
      py::arg("seed") = 0, py::arg("threads") = 1,
      "fit the full pipeline on a CSV and save the model; returns the encoded features");

  m.def(
      "evaluate_csv",
      [](const std::string& input, const std::string& model_path, const std::string& label,
         double threshold, std::size_t threads) {
        auto d = load_labeled(input, label);
        auto fp = model_from_text(slurp(model_path));
        auto scores = pipeline_scores(fp, d, resolve_threads(threads));
        return report_dict(evaluate_scores(d.label().codes, scores, threshold));
      },
      py::arg("input"), py::arg("model_path"), py::arg("label") = "y",
      py::arg("threshold") = 0.5, py::arg("threads") = 1,
      "score a saved model against a labeled CSV");

  m.def(
      "score_csv",
      [](const std::string& input, const std::string& model_path, const std::string& label,
         std::size_t threads) {
        auto d = load_labeled(input, label);
        auto fp = model_from_text(slurp(model_path));
        return pipeline_scores(fp, d, resolve_threads(threads));
      },
      py::arg("input"), py::arg("model_path"), py::arg("label") = "y", py::arg("threads") = 1,
      "per-row positive-vote fractions from a saved model");

  m.def(
      "cross_validate_csv",
      [](const std::string& input, const std::string& label, std::size_t folds,
         std::size_t repeats, std::uint64_t seed, const std::string& selector, bool select,
         std::size_t k, double alpha, int bins, std::size_t trees, std::size_t min_leaf,
         std::size_t max_depth, std::size_t mtry, std::size_t card_threshold,
         std::size_t hash_buckets, double threshold, std::size_t threads) {
        auto cfg = make_config(selector, select, k, alpha, bins, trees, min_leaf, max_depth,
                               mtry, card_threshold, hash_buckets, threshold, seed, threads);
        auto d = load_labeled(input, label);
        auto reports = cross_validate(d, folds, repeats, seed,
                                      [&](const Dataset& tr, const Dataset& te) {
                                        return run_pipeline_fold(tr, te, cfg);
                                      });
        py::list out;
        for (const auto& r : reports) out.append(report_dict(r));
        return out;
      },
      py::arg("input"), py::arg("label") = "y", py::arg("folds") = 5, py::arg("repeats") = 1,
      py::arg("seed") = 0, py::arg("selector") = "p_adj", py::arg("select") = true,
      py::arg("k") = 20, py::arg("alpha") = 0.05, py::arg("bins") = 10, py::arg("trees") = 100,
      py::arg("min_leaf") = 1, py::arg("max_depth") = 0, py::arg("mtry") = 0,
      py::arg("card_threshold") = 256, py::arg("hash_buckets") = std::size_t{1} << 18,
      py::arg("threshold") = 0.5, py::arg("threads") = 1,
      "repeated stratified cross-validation of the full pipeline on a CSV");
}
