// Acceptance gate: one [PASS]/[FAIL] line per criterion, exit code = number
// of failed criteria.  Each check pins its tolerance inline; oracles are
// recomputed here from scratch (numerical integration, brute-force loops)
// rather than shared with the library.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adpred/chi2.hpp"
#include "adpred/eval.hpp"
#include "adpred/parallel.hpp"
#include "adpred/forest.hpp"
#include "adpred/pipeline.hpp"
#include "adpred/rng.hpp"
#include "adpred/selectors.hpp"
#include "adpred/synth.hpp"

using namespace adpred;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

// CDF oracle for the quantile check: Simpson integration of the chi-squared
// density after the substitution x = u^2, which removes the df=1 singularity.
double integrated_cdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  const double upper = std::sqrt(x);
  const int panels = 4096;
  const double h = upper / panels;
  auto g = [&](double u) {
    // integrand 2 u^(df-1) e^(-u^2/2) / (2^(df/2) Gamma(df/2)); u -> 0 limit
    if (u <= 0.0) return df == 1.0 ? std::sqrt(2.0 / 3.14159265358979323846) : 0.0;
    double log_pdf = (0.5 * df - 1.0) * 2.0 * std::log(u) - 0.5 * u * u -
                     0.5 * df * std::log(2.0) - std::lgamma(0.5 * df);
    return 2.0 * u * std::exp(log_pdf);
  };
  double sum = g(0.0) + g(upper);
  for (int i = 1; i < panels; ++i) sum += g(i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

void criterion_1() {
  auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int df = 1; df <= 100; ++df) {
    for (int i = 1; i <= 99; ++i) {
      double p = i / 100.0;
      double back = chi2_cdf(chi2_quantile(p, df), df);
      worst = std::max(worst, std::fabs(back - p));
    }
  }

  double lo = 1.0, hi = 10.0;
  for (int i = 0; i < 80; ++i) {
    double mid = 0.5 * (lo + hi);
    (integrated_cdf(mid, 1.0) < 0.95 ? lo : hi) = mid;
  }
  double oracle = 0.5 * (lo + hi);
  double got = chi2_quantile(0.95, 1.0);
  double el = seconds_since(t0);

  bool ok = worst <= 1e-8 && std::fabs(got - oracle) <= 1e-3 &&
            std::fabs(got - 3.8415) <= 1e-3 && el < 5.0;
  report("criterion 1 (quantile/cdf numerics)", ok,
         fmt("round-trip worst |err| %.3g (tol 1e-8); quantile(0.95,1) %.6f vs integration "
             "oracle %.6f (tol 1e-3); %.2fs (limit 5s)",
             worst, got, oracle, el));
}

// ---------------------------------------------------------------- criterion 2

void criterion_2() {
  std::mt19937_64 g(mix64(20260814, 2));
  double worst_chi2 = 0.0, worst_mi = 0.0, worst_g = 0.0;
  int built = 0;
  while (built < 1000) {
    std::size_t r = 2 + bounded(g, 5), c = 2 + bounded(g, 5);
    std::size_t n = 4 + bounded(g, 9997);
    std::vector<std::vector<double>> counts(r, std::vector<double>(c, 0.0));
    for (std::size_t i = 0; i < n; ++i) counts[bounded(g, r)][bounded(g, c)] += 1.0;

    ContingencyTable t;
    try {
      t = table_from_counts(counts);
    } catch (const std::exception&) {
      continue;  // a zero marginal collapsed the table below 2x2
    }
    ++built;

    // independent brute-force passes over the pruned counts
    double bn = 0.0;
    std::vector<double> rt(t.rows(), 0.0), ct(t.cols(), 0.0);
    for (std::size_t i = 0; i < t.rows(); ++i)
      for (std::size_t j = 0; j < t.cols(); ++j) {
        rt[i] += t.counts[i][j];
        ct[j] += t.counts[i][j];
        bn += t.counts[i][j];
      }
    double bchi = 0.0, bmi = 0.0, bg = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i)
      for (std::size_t j = 0; j < t.cols(); ++j) {
        double e = rt[i] * ct[j] / bn;
        double o = t.counts[i][j];
        bchi += (o - e) * (o - e) / e;
        if (o > 0.0) {
          bmi += o / bn * std::log(o * bn / (rt[i] * ct[j]));
          bg += 2.0 * o * std::log(o / e);
        }
      }

    auto rel = [](double a, double b) {
      return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
    };
    worst_chi2 = std::max(worst_chi2, rel(chi2_statistic(t).statistic, bchi));
    worst_mi = std::max(worst_mi, rel(mutual_information(t), bmi));
    worst_g = std::max(worst_g, rel(2.0 * t.n * mutual_information(t), bg));
  }
  bool ok = worst_chi2 <= 1e-9 && worst_mi <= 1e-9 && worst_g <= 1e-9;
  report("criterion 2 (statistic oracles)", ok,
         fmt("1000 random tables; worst rel err: chi2 %.3g, mi %.3g, g-identity %.3g "
             "(tol 1e-9)",
             worst_chi2, worst_mi, worst_g));
}

// ---------------------------------------------------------------- criterion 3

void criterion_3() {
  double v1 = p_adj(6.6667, 1.0, 0.05);
  double v2 = p_adj_soft(6.6667, 1.0, 0.05);
  auto t = table_from_counts({{20.0, 10.0}, {10.0, 20.0}});
  double v3 = mi_adj(t, 0.05).score;
  bool ok = std::fabs(v1 - 0.7354) <= 1e-3 && std::fabs(v2 - 2.0991) <= 1e-3 &&
            std::fabs(v3 - 2.955) <= 0.01;
  report("criterion 3 (worked adjusted scores)", ok,
         fmt("p_adj %.4f (want 0.7354 +- 1e-3); soft %.4f (want 2.0991 +- 1e-3); "
             "mi_adj %.3f (want 2.955 +- 0.01)",
             v1, v2, v3));
}

// ---------------------------------------------------------------- criterion 4

void criterion_4() {
  auto t0 = std::chrono::steady_clock::now();
  const std::size_t threads = resolve_threads(0);
  int a_hits = 0, padj_hits = 0, miadj_hits = 0;
  std::string per_seed;

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SynthConfig sc;
    sc.n_rows = 100000;
    sc.positive_rate = 0.005;
    sc.informative = {{2, {1.0, 50.0}}};
    sc.noise_cardinalities = {50000};
    sc.id_feature = false;
    sc.seed = seed;
    auto d = generate(sc, threads);

    auto find = [](const std::vector<FeatureScore>& v, const std::string& name) {
      return *std::find_if(v.begin(), v.end(),
                           [&](const FeatureScore& s) { return s.feature == name; });
    };

    auto plain = rank_features(d, Selector::chi2_pvalue, {});
    auto inf_p = find(plain, "inf0");
    auto id_p = find(plain, "noise0");
    if (id_p.rank <= inf_p.rank) ++a_hits;

    auto padj = rank_features(d, Selector::p_adj, {});
    auto inf_a = find(padj, "inf0");
    auto id_a = find(padj, "noise0");
    if (inf_a.rank == 1 && id_a.adjusted_score < 0.0) ++padj_hits;

    auto miadj = rank_features(d, Selector::mi_adj, {});
    auto inf_m = find(miadj, "inf0");
    auto id_m = find(miadj, "noise0");
    if (inf_m.rank == 1 && id_m.adjusted_score < 0.0) ++miadj_hits;

    per_seed += fmt("  seed %llu: plain p inf=%.3g id=%.3g (id rank %zu vs inf %zu); "
                    "p_adj id score %.4g; mi_adj id score %.4g\n",
                    (unsigned long long)seed, inf_p.p_value, id_p.p_value, id_p.rank,
                    inf_p.rank, id_a.adjusted_score, id_m.adjusted_score);
  }
  double el = seconds_since(t0);

  bool a_ok = a_hits >= 6;
  bool b_ok = padj_hits >= 9 && miadj_hits >= 9;
  bool time_ok = el < 120.0;
  report("criterion 4a (plain chi-squared favors the id)", a_ok && time_ok,
         fmt("id ranked at or above informative in %d/10 seeds (need >= 6); %.1fs "
             "(limit 120s)",
             a_hits, el));
  if (!a_ok)
    std::fprintf(stderr,
                 "criterion 4a per-seed detail (informative lift 50 drives its p-value to "
                 "exact zero in doubles, so the id's merely tiny p-value can never rank at "
                 "or above it):\n%s",
                 per_seed.c_str());
  report("criterion 4b (adjusted selectors demote the id)", b_ok && time_ok,
         fmt("informative first + id score negative: p_adj %d/10, mi_adj %d/10 (need >= 9)",
             padj_hits, miadj_hits));
}

// ---------------------------------------------------------------- criterion 5

void criterion_5() {
  bool ok = true;
  std::string detail;
  for (std::size_t levels : {2u, 10u, 100u}) {
    std::mt19937_64 g(mix64(555, levels));
    double sum_padj = 0.0, sum_mi = 0.0;
    const int tables = 1000;
    const std::size_t n = 2000;
    for (int k = 0; k < tables; ++k) {
      std::vector<std::vector<double>> counts(levels, std::vector<double>(2, 0.0));
      for (std::size_t i = 0; i < n; ++i)
        counts[bounded(g, levels)][unit_double(g) < 0.35 ? 1 : 0] += 1.0;
      auto t = table_from_counts(counts);
      auto c = chi2_statistic(t);
      sum_padj += p_adj(c.statistic, c.df, 0.05);
      sum_mi += mi_adj(t, 0.05).score;
    }
    double mean_padj = sum_padj / tables, mean_mi = sum_mi / tables;
    ok = ok && mean_padj < 0.0 && mean_mi < 0.0;
    detail += fmt("df %zu: mean p_adj %.4f, mean mi_adj score %.3f; ", levels - 1,
                  mean_padj, mean_mi);
  }
  report("criterion 5 (negative mean scores under independence)", ok,
         detail + "(all must be < 0)");
}

// ---------------------------------------------------------------- criterion 6

void criterion_6() {
  // tp/(tp+fn) = 0.051 and tp/(tp+fp) = 0.044 exactly, in integers
  auto m = metrics(ConfusionMatrix{2244, 41756, 48756, 1000000});
  bool ok = std::fabs(m.tpr - 0.051) <= 1e-12 && std::fabs(m.ppv - 0.044) <= 1e-12 &&
            std::fabs(m.f1 - 0.047) <= 1e-3;
  report("criterion 6 (F1 from the reported row)", ok,
         fmt("tpr %.3f, ppv %.3f -> f1 %.6f (want 0.047 +- 1e-3)", m.tpr, m.ppv, m.f1));
}

// ---------------------------------------------------------------- criterion 7

void criterion_7() {
  double hand = pr_curve_auc({1, 0, 1, 0}, {0.9, 0.8, 0.7, 0.1}).auc;
  double perfect = pr_curve_auc({1, 1, 0, 0}, {0.9, 0.8, 0.2, 0.1}).auc;
  std::vector<std::int32_t> y{1, 0, 0, 1, 0, 0, 0, 1, 0, 0};
  double constant = pr_curve_auc(y, std::vector<double>(y.size(), 0.5)).auc;
  // 0.8333 is the 4-decimal rendering of the exact area 5/6
  bool ok = std::fabs(hand - 5.0 / 6.0) <= 1e-6 && perfect == 1.0 &&
            std::fabs(constant - 0.3) <= 1e-12;
  report("criterion 7 (PR-curve areas)", ok,
         fmt("hand example %.7f (want 5/6 +- 1e-6); perfect %.1f; constant %.2f "
             "(base rate 0.30)",
             hand, perfect, constant));
}

// ---------------------------------------------------------------- criterion 8

void criterion_8() {
  auto small = wilcoxon_signed_rank({1.0, 2.0, 3.0, 4.0, 5.0}, {0.0, 0.0, 0.0, 0.0, 0.0});
  bool small_ok = small.exact && std::fabs(small.p - 0.0625) <= 1e-12;

  double worst = 0.0;
  for (std::uint64_t seed : {71u, 72u, 73u}) {
    std::mt19937_64 g(mix64(seed, 8));
    std::vector<double> a(25), b(25);
    for (std::size_t i = 0; i < 25; ++i) {
      a[i] = unit_double(g);
      b[i] = unit_double(g);
    }
    auto exact = wilcoxon_signed_rank(a, b, 25);
    auto approx = wilcoxon_signed_rank(a, b, 0);
    if (!exact.exact || approx.exact) {
      worst = 1.0;
      break;
    }
    worst = std::max(worst, std::fabs(exact.p - approx.p));
  }
  bool ok = small_ok && worst <= 0.02;
  report("criterion 8 (signed-rank branches)", ok,
         fmt("n=5 all-positive exact p %.4f (want 0.0625); exact vs approx at n=25 "
             "max |diff| %.4f (tol 0.02)",
             small.p, worst));
}

// ---------------------------------------------------------------- criterion 9

EncodedMatrix dense_matrix(const std::vector<std::vector<double>>& rows) {
  EncodedMatrix m;
  m.n_rows = rows.size();
  m.n_cols = rows.empty() ? 0 : rows[0].size();
  for (std::size_t j = 0; j < m.n_cols; ++j)
    m.blocks.push_back({"c" + std::to_string(j), EncodingKind::numeric, j, 1});
  m.row_ptr.push_back(0);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size(); ++j)
      if (r[j] != 0.0) {
        m.col_idx.push_back(j);
        m.values.push_back(r[j]);
      }
    m.row_ptr.push_back(m.col_idx.size());
  }
  return m;
}

struct PipelineArtifacts {
  std::string scores, model, reports;
};

PipelineArtifacts pipeline_artifacts(std::size_t threads) {
  SynthConfig sc;
  sc.n_rows = 5000;
  sc.positive_rate = 0.1;
  sc.informative = {{2, {1.0, 8.0}}};
  sc.noise_cardinalities = {5};
  sc.id_feature = true;
  sc.seed = 33;
  auto d = generate(sc, threads);

  PipelineConfig cfg;
  cfg.selector = Selector::mi_adj;
  cfg.selection.top_k = 2;
  cfg.forest.n_trees = 20;
  cfg.forest.max_depth = 8;
  cfg.forest.min_samples_leaf = 10;
  cfg.forest.features_per_split = 16;
  cfg.forest.seed = 9;
  cfg.threads = threads;

  PipelineArtifacts out;
  out.scores = scores_to_tsv(rank_features(d, Selector::p_adj, {}));
  out.model = model_to_text(fit_pipeline(d, cfg));
  out.reports = reports_to_tsv(cross_validate(
      d, 3, 1, 77, [&](const Dataset& tr, const Dataset& te) {
        return run_pipeline_fold(tr, te, cfg);
      }));
  return out;
}

void criterion_9() {
  std::vector<std::vector<double>> rows;
  std::vector<std::int32_t> y;
  for (std::size_t i = 0; i < 200; ++i) {
    double a = static_cast<double>(i % 2), b = static_cast<double>((i / 2) % 2);
    rows.push_back({a, b});
    y.push_back(static_cast<std::int32_t>(a) ^ static_cast<std::int32_t>(b));
  }
  auto x = dense_matrix(rows);
  ForestConfig fc;
  fc.n_trees = 50;
  fc.seed = 4;
  auto model = fit_forest(x, y, fc);
  auto pred = predict_label(model, x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += pred[i] == y[i];
  double acc = static_cast<double>(hits) / static_cast<double>(y.size());

  auto run1 = pipeline_artifacts(1);
  auto run4 = pipeline_artifacts(4);
  bool identical = run1.scores == run4.scores && run1.model == run4.model &&
                   run1.reports == run4.reports;

  bool ok = acc >= 0.95 && identical;
  report("criterion 9 (forest sanity and determinism)", ok,
         fmt("xor training accuracy %.3f (need >= 0.95); same-seed reruns byte-identical "
             "across 1 vs 4 threads: models %s, score TSVs %s, reports %s",
             acc, run1.model == run4.model ? "yes" : "NO",
             run1.scores == run4.scores ? "yes" : "NO",
             run1.reports == run4.reports ? "yes" : "NO"));
}

// --------------------------------------------------------------- criterion 10

bool shell(const std::string& cmd) {
  int rc = std::system(cmd.c_str());
  return rc != -1 && WIFEXITED(rc) && WEXITSTATUS(rc) == 0;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_10(const std::string& cli) {
  if (cli.empty()) {
    report("criterion 10 (end-to-end run)", false, "no CLI path supplied on argv[1]");
    return;
  }
  auto t0 = std::chrono::steady_clock::now();
  fs::path dir = fs::temp_directory_path() / "adpred_acceptance_e2e";
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir);
  auto at = [&](const char* name) { return (dir / name).string(); };
  auto run = [&](const std::string& args, const char* log) {
    return shell(cli + " " + args + " > " + at(log) + " 2>&1");
  };

  const std::string common =
      "--trees 30 --max-depth 10 --min-leaf 20 --mtry 32 --threads 4 ";
  bool steps =
      run("generate --out " + at("big.csv") +
              " --rows 100000 --rate 0.005 --informative 1,1,1,1,1,1,1,1,5,5"
              " --noise 2,5,10,100,1000,10000,50000 --id --seed 101 --threads 4",
          "gen.log") &&
      run("generate --out " + at("test.csv") +
              " --rows 20000 --rate 0.005 --informative 1,1,1,1,1,1,1,1,5,5"
              " --noise 2,5,10,100,1000,10000,50000 --id --seed 102 --threads 4",
          "gen2.log") &&
      run("select --input " + at("big.csv") + " --selector p_adj --k 20 --out " +
              at("scores.tsv"),
          "select.log") &&
      run("train --input " + at("big.csv") + " --selector mi_adj --k 10 " + common +
              "--seed 7 --model " + at("model.txt"),
          "train.log") &&
      run("evaluate --input " + at("test.csv") + " --model " + at("model.txt") +
              " --seed 0 --threads 4 --out " + at("holdout.tsv") + " --pr " + at("pr.tsv"),
          "eval_hold.log") &&
      run("evaluate --input " + at("big.csv") + " --cv --folds 5 --selector mi_adj --k 10 " +
              common + "--seed 7 --out " + at("cv_sel.tsv"),
          "cv_sel.log") &&
      run("evaluate --input " + at("big.csv") + " --cv --folds 5 --no-select " + common +
              "--seed 7 --out " + at("cv_base.tsv"),
          "cv_base.log") &&
      run("compare --inputs " + at("cv_sel.tsv") + " " + at("cv_base.tsv") + " --out " +
              at("pmatrix.tsv"),
          "compare.log");
  double el = seconds_since(t0);

  if (!steps) {
    std::string logs;
    for (const char* log : {"gen.log", "gen2.log", "select.log", "train.log",
                            "eval_hold.log", "cv_sel.log", "cv_base.log", "compare.log"}) {
      auto text = read_all(dir / log);
      if (!text.empty()) logs += std::string(log) + ": " + text;
    }
    std::fprintf(stderr, "criterion 10 step logs:\n%s", logs.c_str());
    report("criterion 10 (end-to-end run)", false,
           fmt("a pipeline step exited nonzero after %.1fs; logs on stderr", el));
    return;
  }

  // the strongest feature must top the score file
  std::istringstream scores(read_all(dir / "scores.tsv"));
  std::string line;
  std::getline(scores, line);  // header
  std::getline(scores, line);
  bool inf_first = line.rfind("inf0\t", 0) == 0;

  // unselected baseline: the imbalanced-regime pattern, high ACC near-zero TPR
  std::istringstream base(read_all(dir / "cv_base.log"));
  std::string header, row;
  std::getline(base, header);
  std::getline(base, row);
  bool header_ok = header == "ACC\tTPR\tPPV\tF1-SCORE\tAUC-PR";
  double acc = 0.0, tpr = 0.0, ppv = 0.0, f1 = 0.0, auc_base = 0.0;
  bool row_ok = std::sscanf(row.c_str(), "%lf %lf %lf %lf %lf", &acc, &tpr, &ppv, &f1,
                            &auc_base) == 5;

  std::istringstream seled(read_all(dir / "cv_sel.log"));
  std::getline(seled, header);
  std::getline(seled, row);
  double acc_s = 0.0, tpr_s = 0.0, ppv_s = 0.0, f1_s = 0.0, auc_sel = 0.0;
  std::sscanf(row.c_str(), "%lf %lf %lf %lf %lf", &acc_s, &tpr_s, &ppv_s, &f1_s, &auc_sel);

  // p-value matrix: header + one row per input, unit diagonal
  std::istringstream pm(read_all(dir / "pmatrix.tsv"));
  std::vector<std::string> pm_lines;
  while (std::getline(pm, line)) pm_lines.push_back(line);
  bool pm_ok = pm_lines.size() == 3;

  bool ok = inf_first && header_ok && row_ok && acc > 99.0 && tpr < 0.05 && pm_ok &&
            el < 300.0;
  report("criterion 10 (end-to-end run)", ok,
         fmt("generate/select/train/evaluate/compare on 100k rows x 9 features in %.1fs "
             "(limit 300s); baseline acc %.2f%% (need > 99) tpr %.4f (need < 0.05) "
             "auc-pr %.4f; selected auc-pr %.4f; top-ranked feature %s",
             el, acc, tpr, auc_base, auc_sel, inf_first ? "inf0" : "WRONG"));
}

}  // namespace

int main(int argc, char** argv) {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10(argc > 1 ? argv[1] : "");
  std::printf("%d criterion line(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
