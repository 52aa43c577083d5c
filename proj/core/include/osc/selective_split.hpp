#pragma once

#include <span>
#include <vector>

#include "osc/conformal.hpp"
#include "osc/dataset.hpp"
#include "osc/prediction_set.hpp"
#include "osc/random.hpp"
#include "osc/split.hpp"

namespace osc {

// Frequency-based calibration-inclusion policy: pi(k) is the probability that
// a sample whose label occurs k times is assigned to calibration. pi(1) = 0
// keeps singleton labels in training; pi(k >= 2) is constant at
// min(n_cal / (n (1 - p1)), 1).
class InclusionPolicy {
 public:
  InclusionPolicy() = default;
  InclusionPolicy(double pi_rare, double pi_common)
      : pi_singleton_(pi_rare), pi_common_(pi_common) {}

  double pi(std::size_t k) const {
    if (k == 0) return 0.0;
    if (k == 1) return pi_singleton_;
    return pi_common_;
  }

  // Constant policy pi(k) = p for every k >= 1.
  static InclusionPolicy constant(double p) { return InclusionPolicy(p, p); }

 private:
  double pi_singleton_ = 0.0;
  double pi_common_ = 0.0;
};

// Policy from the plug-in singleton proportion p1 = M_1 / n (clamped to
// [0, 1 - 1/n]).
InclusionPolicy make_policy(std::size_t n, const FrequencyProfile& profile,
                            std::size_t n_cal);

struct SplitAssignment {
  SplitIndices idx;
  InclusionPolicy policy;
};

// Independent Bernoulli(pi(N(Y_i))) draws conditional on the label sequence.
SplitAssignment selective_split(std::span<const Label> labels, const InclusionPolicy& policy,
                                RandomSource& rng);

// Normalized swap-configuration weights for one candidate test label.
struct ConformalizationWeights {
  std::vector<double> cal;  // aligned with the split's calibration index order
  double test = 0.0;        // weight of the unswapped configuration
};

// Reference implementation: evaluates the full n-factor product for every
// swap configuration (log-space with zero short-circuiting), then normalizes.
// Throws if every configuration has probability zero.
ConformalizationWeights weights_naive(Label y, std::span<const Label> labels,
                                      const SplitAssignment& split,
                                      const InclusionPolicy& policy);

// O(n) path: works with per-configuration ratios that only touch the factors
// of the two labels affected by the swap. Identical to weights_naive within
// 1e-10 per weight; falls back to it when the unswapped configuration has
// probability zero (ratios undefined).
ConformalizationWeights weights_fast(Label y, std::span<const Label> labels,
                                     const SplitAssignment& split,
                                     const InclusionPolicy& policy);

// Weighted conformal p-value per label in predictor.label_space() for a query.
std::vector<double> weighted_label_pvalues(std::span<const double> x,
                                           const LabeledDataset& data,
                                           const SplitAssignment& split,
                                           const InclusionPolicy& policy,
                                           const CalibratedPredictor& predictor,
                                           RandomSource& rng);

// Weighted closed-set prediction set over the observed label space:
// { y : w_{n+1}(y) + sum_j w_j(y) 1{S_j >= S_test(y)} > alpha }.
PredictionSet weighted_predict(std::span<const double> x, const LabeledDataset& data,
                               const SplitAssignment& split, const InclusionPolicy& policy,
                               const CalibratedPredictor& predictor, double alpha,
                               RandomSource& rng);

}  // namespace osc
