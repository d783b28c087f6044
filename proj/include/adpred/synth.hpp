#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adpred/dataset.hpp"

namespace adpred {

struct InformativeSpec {
  std::size_t cardinality = 2;
  std::vector<double> lifts;  // one positive odds multiplier per level
};

// Label model: each row draws every feature level uniformly; the event
// probability is p = o/(1+o) with o = base_odds * product of the informative
// lifts at the drawn levels, base_odds = rate/(1-rate).  A lift of 1
// everywhere reduces to independent Bernoulli(rate) labels, and a single
// informative feature has the closed per-level rate p_j = o*l_j/(1+o*l_j).
struct SynthConfig {
  std::size_t n_rows = 100000;
  double positive_rate = 0.005;
  std::vector<InformativeSpec> informative;
  std::vector<std::size_t> noise_cardinalities = {2, 10, 100, 10000, 50000};
  bool id_feature = false;  // adds a near-unique column (n_rows levels)
  std::uint64_t seed = 0;
};

// Throws std::domain_error when the config cannot produce probabilities in
// (0, 1): rate outside (0, 1), UInt cardinality < 2, non-positive or
// non-finite lift, or a lift vector whose length differs from its cardinality.
void validate(const SynthConfig& cfg);

// Columns in order: inf0.., noise0.., id, label "y".  Rows are generated in
// chunks of 8192; chunk c consumes std::mt19937_64(mix64(seed, c)) and inside
// a chunk each row draws informative levels, noise levels, id level, then the
// label coin, so output is identical for any thread count.
Dataset generate(const SynthConfig& cfg, std::size_t threads = 1);

// "feature<TAB>role<TAB>params" ground-truth table for a config.
std::string truth_sidecar(const SynthConfig& cfg);

}  // namespace adpred
