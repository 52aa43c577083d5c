#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "osc/conformal.hpp"
#include "osc/dataset.hpp"
#include "osc/good_turing.hpp"
#include "osc/prediction_set.hpp"
#include "osc/random.hpp"
#include "osc/selective_split.hpp"

namespace osc {

// Split of the total significance budget alpha across the closed-set
// predictor, the new-label test, and the seen-label test.
struct AlphaAllocation {
  double alpha_class = 0.0;
  double alpha_unseen = 0.0;
  double alpha_seen = 0.0;

  double total() const { return alpha_class + alpha_unseen + alpha_seen; }
  static AlphaAllocation thirds(double alpha) {
    return {alpha / 3.0, alpha / 3.0, alpha / 3.0};
  }
  void validate(double alpha) const;  // components in [0,1], sum == alpha (1e-12)
};

// The three ingredients of an open-set prediction, bound to one reference
// sample. Each callable receives a dedicated random stream.
struct OpenSetComponents {
  std::function<PredictionSet(std::span<const double>, double, RandomSource&)> closed_set;
  std::function<double(std::span<const double>, RandomSource&)> unseen_pvalue;
  std::function<double(std::span<const double>, RandomSource&)> seen_pvalue;
};

// Three-case joker rule:
//   (i)  psi_unseen <= a_unseen and psi_seen >  a_seen -> closed-set set only
//   (ii) psi_unseen >  a_unseen and psi_seen <= a_seen -> {joker} only
//   (iii) otherwise                                    -> closed-set set + joker
PredictionSet apply_joker_rule(PredictionSet closed, double psi_unseen, double psi_seen,
                               const AlphaAllocation& allocation);

PredictionSet cgtc_predict(std::span<const double> x, const AlphaAllocation& allocation,
                           const OpenSetComponents& components, RandomSource& rng);

// Composite informativeness loss: lambda * |set| / baseline_size plus
// (1 - lambda) * 1{joker wasted on a seen true label}.
double allocation_loss(const PredictionSet& set, Label y_true, std::size_t baseline_size,
                       std::span<const Label> seen_space, double lambda);

enum class PvalueVariant { gt, rgt, xgt };
enum class SplitStrategy { random_uniform, selective };

struct ClassifierConfig {
  int knn_k = 5;
  Metric metric = Metric::euclidean;
  int lof_k = 20;
  double beta = 1.6;
  ApsConfig aps;
  double smoothing_noise_scale = 0.1;
  SplitStrategy split = SplitStrategy::random_uniform;
  double cal_fraction = 0.1;  // target share of samples used for calibration
};

// Open-set conformal classifier bound to one reference sample: closed-set
// component (plain or selective-split weighted), new-label p-value in the
// configured variant, and the composite seen-label p-value built from
// randomized feature-blind p-values with power-law constants.
class OpenSetClassifier {
 public:
  static OpenSetClassifier build(const LabeledDataset& reference, const ClassifierConfig& cfg,
                                 PvalueVariant unseen_variant, RandomSource& rng);

  double unseen_pvalue(std::span<const double> x, RandomSource& rng) const;
  double seen_pvalue(RandomSource& rng) const;

  // Closed-set conformal p-values over seen_labels() (weighted under the
  // selective strategy).
  std::vector<double> closed_set_pvalues(std::span<const double> x, RandomSource& rng) const;
  PredictionSet closed_set(std::span<const double> x, double alpha, RandomSource& rng) const;

  // Full open-set prediction; forks "closed" / "unseen" / "seen" streams from
  // the passed source.
  PredictionSet predict(std::span<const double> x, const AlphaAllocation& allocation,
                        RandomSource& rng) const;

  const std::vector<Label>& seen_labels() const { return predictor_.label_space(); }
  const FrequencyProfile& profile() const { return profile_; }
  const CalibratedPredictor& predictor() const { return predictor_; }
  const SplitAssignment& split() const { return split_; }
  PvalueVariant variant() const { return variant_; }

 private:
  ClassifierConfig cfg_;
  PvalueVariant variant_ = PvalueVariant::xgt;
  LabeledDataset reference_;
  FrequencyProfile profile_;
  SplitAssignment split_;
  CalibratedPredictor predictor_;
  PowerLawWeights seen_weights_;
  std::vector<std::size_t> observed_frequencies_;  // K_n
  FrequencyScorer unseen_scorer_;                  // only populated for xgt
  std::vector<double> singleton_scores_;           // conformity of frequency-1 samples
};

struct TuningConfig {
  double lambda = 0.5;
  int folds = 10;
  std::vector<double> alpha_seen_candidates = {0.0, 0.01, 0.02, 0.05, 0.1};
  double alpha_class_start = 0.01;
  double alpha_class_step = 0.005;
  ClassifierConfig classifier;
  PvalueVariant variant = PvalueVariant::xgt;
};

// K-fold cross-validated grid search over (alpha_seen, alpha_class) minimizing
// the mean allocation loss; alpha_unseen takes the remainder. Ties prefer
// larger alpha_class, then larger alpha_unseen. Deterministic given (data,
// rng identity, cfg).
AlphaAllocation tune_allocation(const LabeledDataset& data, double alpha,
                                const TuningConfig& cfg, RandomSource& rng);

}  // namespace osc
