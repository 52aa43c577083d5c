#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "osc/dataset.hpp"
#include "osc/lof.hpp"
#include "osc/random.hpp"

namespace osc {

// Conformal p-values for the frequency hypotheses H_k: "the test label occurs
// exactly k times among the first n labels" (k = 0 means a new label).

// Deterministic feature-blind p-value ((k+1) M_{k+1} + k + 1) / (n + 1).
double gt_pvalue(std::size_t k, const FrequencyProfile& profile);

// Randomized feature-blind p-value (Uniform{0,...,(k+1)M_{k+1}+k} + 1)/(n+1).
// Strictly below gt_pvalue with probability 1 - 1/((k+1)M_{k+1}+k+1).
double rgt_pvalue(std::size_t k, const FrequencyProfile& profile, RandomSource& rng);

// One-class scorer serving hypothesis H_k, fitted on the features of all
// samples whose label frequency is neither k nor k+1 (a permutation-invariant
// training set). When the exclusion leaves fewer than 2 samples the scorer
// falls back to feature-blind mode.
struct FrequencyScorer {
  std::size_t k = 0;
  std::optional<OneClassScorer> scorer;  // empty in feature-blind fallback mode
  bool feature_blind_fallback = false;
  std::size_t training_size = 0;
};

FrequencyScorer fit_frequency_scorer(std::size_t k, const LabeledDataset& data, int lof_k = 20);

struct XgtResult {
  double value = 1.0;
  // True for k >= 1 when M_k = 0: H_k cannot hold, the caller skips it.
  bool vacuous = false;
};

// Feature-based p-value: counts frequency-(k+1) samples whose conformity score
// is at least the test point's, plus (for k >= 1) the worst same-label cohort
// among frequency-k labels. Always <= gt_pvalue(k).
XgtResult xgt_pvalue(std::size_t k, const LabeledDataset& data, std::span<const double> x_test,
                     const FrequencyScorer& scorer);

// Power-law multiple-testing constants c_k = k^-beta / sum_j j^-beta, k in 1..n.
struct PowerLawWeights {
  double beta = 1.6;
  std::vector<double> c;  // c[k-1] = c_k

  double at(std::size_t k) const { return c.at(k - 1); }
};

PowerLawWeights power_law_weights(std::size_t n, double beta = 1.6);

// Combination p-value for the composite "label was seen before" hypothesis:
// max over observed frequencies k of psi_k / c_k. May exceed 1; callers
// compare to their budget directly and never clamp.
double seen_pvalue(const std::map<std::size_t, double>& pvalues, const PowerLawWeights& weights);

}  // namespace osc
