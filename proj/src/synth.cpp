#include "adpred/synth.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "adpred/parallel.hpp"
#include "adpred/rng.hpp"
#include "adpred/text.hpp"

namespace adpred {

namespace {

constexpr std::size_t kChunk = 8192;

std::vector<std::string> level_names(const char* prefix, std::size_t k) {
  std::vector<std::string> names;
  names.reserve(k);
  for (std::size_t i = 0; i < k; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

Column categorical_feature(std::string name, std::size_t cardinality, const char* prefix,
                           std::size_t n_rows) {
  Column c;
  c.schema = {std::move(name), ColumnKind::categorical, ColumnRole::feature};
  c.levels = level_names(prefix, cardinality);
  c.codes.resize(n_rows);
  return c;
}

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.n_rows < 1) throw std::domain_error("n_rows out of domain (must be >= 1)");
  if (!(cfg.positive_rate > 0.0) || !(cfg.positive_rate < 1.0))
    throw std::domain_error("positive_rate out of domain (must be in (0, 1))");
  for (const auto& f : cfg.informative) {
    if (f.cardinality < 2)
      throw std::domain_error("informative cardinality out of domain (must be >= 2)");
    if (f.lifts.size() != f.cardinality)
      throw std::domain_error("lift vector length must equal the cardinality");
    for (double l : f.lifts)
      if (!(l > 0.0) || !std::isfinite(l))
        throw std::domain_error("lift out of domain (must be finite and > 0)");
  }
  for (std::size_t k : cfg.noise_cardinalities)
    if (k < 2) throw std::domain_error("noise cardinality out of domain (must be >= 2)");
}

Dataset generate(const SynthConfig& cfg, std::size_t threads) {
  validate(cfg);
  std::size_t n = cfg.n_rows;

  Dataset d;
  d.n_rows = n;
  for (std::size_t i = 0; i < cfg.informative.size(); ++i)
    d.columns.push_back(categorical_feature("inf" + std::to_string(i),
                                            cfg.informative[i].cardinality, "v", n));
  for (std::size_t i = 0; i < cfg.noise_cardinalities.size(); ++i)
    d.columns.push_back(categorical_feature("noise" + std::to_string(i),
                                            cfg.noise_cardinalities[i], "v", n));
  if (cfg.id_feature) d.columns.push_back(categorical_feature("id", n, "u", n));
  Column label;
  label.schema = {"y", ColumnKind::categorical, ColumnRole::label};
  label.levels = {"0", "1"};
  label.codes.resize(n);
  d.columns.push_back(std::move(label));
  d.label_index = static_cast<std::ptrdiff_t>(d.columns.size()) - 1;

  std::size_t n_inf = cfg.informative.size();
  std::size_t n_noise = cfg.noise_cardinalities.size();
  double base_odds = cfg.positive_rate / (1.0 - cfg.positive_rate);

  std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_chunks(chunks, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      std::mt19937_64 g(mix64(cfg.seed, c));
      std::size_t row_end = std::min(n, (c + 1) * kChunk);
      for (std::size_t r = c * kChunk; r < row_end; ++r) {
        double odds = base_odds;
        for (std::size_t i = 0; i < n_inf; ++i) {
          std::size_t level = bounded(g, cfg.informative[i].cardinality);
          d.columns[i].codes[r] = static_cast<std::int32_t>(level);
          odds *= cfg.informative[i].lifts[level];
        }
        for (std::size_t i = 0; i < n_noise; ++i) {
          std::size_t level = bounded(g, cfg.noise_cardinalities[i]);
          d.columns[n_inf + i].codes[r] = static_cast<std::int32_t>(level);
        }
        if (cfg.id_feature)
          d.columns[n_inf + n_noise].codes[r] = static_cast<std::int32_t>(bounded(g, n));
        double p = odds / (1.0 + odds);
        d.columns.back().codes[r] = unit_double(g) < p ? 1 : 0;
      }
    }
  });
  return d;
}

std::string truth_sidecar(const SynthConfig& cfg) {
  std::ostringstream out;
  out << "feature\trole\tparams\n";
  for (std::size_t i = 0; i < cfg.informative.size(); ++i) {
    out << "inf" << i << "\tinformative\tcardinality=" << cfg.informative[i].cardinality
        << ";lifts=";
    for (std::size_t j = 0; j < cfg.informative[i].lifts.size(); ++j) {
      if (j) out << ",";
      out << shortest_double(cfg.informative[i].lifts[j]);
    }
    out << "\n";
  }
  for (std::size_t i = 0; i < cfg.noise_cardinalities.size(); ++i)
    out << "noise" << i << "\tnoise\tcardinality=" << cfg.noise_cardinalities[i] << "\n";
  if (cfg.id_feature) out << "id\tid\tcardinality=" << cfg.n_rows << "\n";
  out << "y\tlabel\tpositive_rate=" << shortest_double(cfg.positive_rate) << "\n";
  return out.str();
}

}  // namespace adpred
