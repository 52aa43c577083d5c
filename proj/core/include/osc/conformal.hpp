#pragma once

#include <span>
#include <vector>

#include "osc/dataset.hpp"
#include "osc/knn.hpp"
#include "osc/prediction_set.hpp"
#include "osc/random.hpp"
#include "osc/split.hpp"

namespace osc {

struct ApsConfig {
  // Randomized adaptive scores subtract U * p_y from the cumulative sum,
  // making calibration scores almost surely distinct. The non-randomized form
  // is the deterministic reference path.
  bool randomized = true;
};

struct CalibrationRecord {
  double score = 0.0;
  Label label = 0;
};

// Adaptive (generalized inverse-quantile) nonconformity score: the cumulative
// sum of class probabilities down to the candidate label's rank. Probability
// ties are broken by class index ascending. With cfg.randomized, subtracts
// U * probs[label_index] for U ~ Uniform[0,1).
double aps_score(std::span<const double> probs, std::size_t label_index,
                 const ApsConfig& cfg, RandomSource& rng);

// Same, with an externally supplied randomization draw (used to share one U
// across all candidate labels of a single test point).
double aps_score_with_draw(std::span<const double> probs, std::size_t label_index,
                           const ApsConfig& cfg, double u);

// The ceil((1+n)(1-alpha))-th smallest calibration score; +infinity when that
// rank exceeds n (small calibration sets force the full label space).
double calibrate_threshold(std::span<const double> scores, double alpha);

// (1 + #{i : S_i >= S_test}) / (1 + n).
double conformal_pvalue(double test_score, std::span<const double> cal_scores);

// Appends one probability entry per unseen calibration label, each equal to
// (1 + n_singleton) / ((1 + n_train) * unseen_count) plus uniform noise on
// [0, p_unseen * noise_scale], then renormalizes to sum 1.
std::vector<double> smooth_unseen_probs(std::span<const double> probs,
                                        std::size_t unseen_count, std::size_t n_train,
                                        std::size_t n_singleton, RandomSource& rng,
                                        double noise_scale = 0.1);

// Split-conformal classification over a fixed label space: the set of labels
// whose conformal p-value exceeds alpha. label_space must be a subset of the
// model's class index. The joker flag is always false.
PredictionSet closed_set_predict(const KnnClassifier& model,
                                 std::span<const CalibrationRecord> cal,
                                 std::span<const double> x, double alpha,
                                 std::span<const Label> label_space, const ApsConfig& cfg,
                                 RandomSource& rng);

// Split-conformal classifier with the plug-in label space (all labels observed
// in the reference data). Handles calibration labels absent from the training
// split by probability smoothing, so every observed label is scoreable.
class CalibratedPredictor {
 public:
  struct Config {
    int knn_k = 5;
    Metric metric = Metric::euclidean;
    ApsConfig aps;
    double smoothing_noise_scale = 0.1;
  };

  // Probability floor applied to the extended class probabilities so that no
  // label scores exactly 1 (see extended_probs).
  static constexpr double kProbFloor = 1e-10;

  static CalibratedPredictor build(const LabeledDataset& data, const SplitIndices& split,
                                   const Config& cfg, RandomSource& rng);

  // Conformal p-value per label in label_space(), one shared randomization
  // draw per call.
  std::vector<double> label_pvalues(std::span<const double> x, RandomSource& rng) const;
  // Nonconformity score per label in label_space() for a query, one shared
  // randomization draw per call (the weighted path consumes these directly).
  std::vector<double> test_scores(std::span<const double> x, RandomSource& rng) const;

  PredictionSet predict(std::span<const double> x, double alpha, RandomSource& rng) const;

  // Observed label space: training classes first (sorted), then calibration-
  // only labels (sorted).
  const std::vector<Label>& label_space() const { return label_space_; }
  // Calibration scores aligned with the calibration index order used to build.
  const std::vector<double>& calibration_scores() const { return cal_scores_; }
  const KnnClassifier& model() const { return model_; }

  // Class probabilities over label_space() (smoothed when needed).
  std::vector<double> extended_probs(std::span<const double> x, RandomSource& rng) const;

 private:
  Config cfg_;
  KnnClassifier model_;
  std::vector<Label> label_space_;
  std::size_t n_train_ = 0;
  std::size_t n_train_singleton_ = 0;
  std::vector<double> cal_scores_;         // build order
  std::vector<double> cal_scores_sorted_;  // ascending
};

// One-call plug-in prediction (Algorithm-style convenience wrapper around
// CalibratedPredictor): train on split.train, calibrate on split.cal, label
// space = all labels observed in data.
PredictionSet plug_in_predict(const LabeledDataset& data, std::span<const double> x,
                              double alpha, const SplitIndices& split, const ApsConfig& cfg,
                              RandomSource& rng);

}  // namespace osc
