#include "osc/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace osc {

namespace {

// Positions of probs sorted by (probability descending, index ascending).
std::vector<std::size_t> descending_order(std::span<const double> probs) {
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  return order;
}

}  // namespace

double aps_score_with_draw(std::span<const double> probs, std::size_t label_index,
                           const ApsConfig& cfg, double u) {
  if (label_index >= probs.size()) {
    throw std::invalid_argument("aps_score: label index out of range");
  }
  const auto order = descending_order(probs);
  double cumulative = 0.0;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    cumulative += probs[order[pos]];
    if (order[pos] == label_index) break;
  }
  if (cfg.randomized) cumulative -= u * probs[label_index];
  return cumulative;
}

double aps_score(std::span<const double> probs, std::size_t label_index, const ApsConfig& cfg,
                 RandomSource& rng) {
  const double u = cfg.randomized ? rng.uniform() : 0.0;
  return aps_score_with_draw(probs, label_index, cfg, u);
}

double calibrate_threshold(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw std::invalid_argument("calibrate_threshold: empty scores");
  if (alpha <= 0.0 || alpha >= 1.0) {
    throw std::invalid_argument("calibrate_threshold: alpha must be in (0,1)");
  }
  const std::size_t n = scores.size();
  const auto rank = static_cast<std::size_t>(
      std::ceil((1.0 + static_cast<double>(n)) * (1.0 - alpha)));
  if (rank > n) return std::numeric_limits<double>::infinity();
  std::vector<double> sorted(scores.begin(), scores.end());
  std::nth_element(sorted.begin(), sorted.begin() + (rank - 1), sorted.end());
  return sorted[rank - 1];
}

double conformal_pvalue(double test_score, std::span<const double> cal_scores) {
  std::size_t ge = 0;
  for (double s : cal_scores) {
    if (s >= test_score) ++ge;
  }
  return static_cast<double>(1 + ge) / static_cast<double>(1 + cal_scores.size());
}

std::vector<double> smooth_unseen_probs(std::span<const double> probs,
                                        std::size_t unseen_count, std::size_t n_train,
                                        std::size_t n_singleton, RandomSource& rng,
                                        double noise_scale) {
  std::vector<double> extended(probs.begin(), probs.end());
  if (unseen_count == 0) return extended;

  const double p_unseen = (1.0 + static_cast<double>(n_singleton)) /
                          ((1.0 + static_cast<double>(n_train)) *
                           static_cast<double>(unseen_count));
  extended.reserve(probs.size() + unseen_count);
  for (std::size_t i = 0; i < unseen_count; ++i) {
    extended.push_back(p_unseen + rng.uniform(0.0, p_unseen * noise_scale));
  }
  const double total = std::accumulate(extended.begin(), extended.end(), 0.0);
  for (double& p : extended) p /= total;
  return extended;
}

PredictionSet closed_set_predict(const KnnClassifier& model,
                                 std::span<const CalibrationRecord> cal,
                                 std::span<const double> x, double alpha,
                                 std::span<const Label> label_space, const ApsConfig& cfg,
                                 RandomSource& rng) {
  std::vector<double> cal_scores(cal.size());
  for (std::size_t i = 0; i < cal.size(); ++i) cal_scores[i] = cal[i].score;

  const auto probs = model.predict_proba(x);
  const auto& classes = model.class_index();
  const double u = cfg.randomized ? rng.uniform() : 0.0;

  PredictionSet out;
  for (Label y : label_space) {
    const auto it = std::lower_bound(classes.begin(), classes.end(), y);
    if (it == classes.end() || *it != y) {
      throw std::invalid_argument("closed_set_predict: label outside the model's class index");
    }
    const auto pos = static_cast<std::size_t>(it - classes.begin());
    const double s = aps_score_with_draw(probs, pos, cfg, u);
    if (conformal_pvalue(s, cal_scores) > alpha) out.seen.push_back(y);
  }
  std::sort(out.seen.begin(), out.seen.end());
  return out;
}

CalibratedPredictor CalibratedPredictor::build(const LabeledDataset& data,
                                               const SplitIndices& split, const Config& cfg,
                                               RandomSource& rng) {
  data.validate();
  CalibratedPredictor p;
  p.cfg_ = cfg;

  const LabeledDataset train = data.subset(split.train);
  p.model_ = KnnClassifier::fit(train, cfg.knn_k, cfg.metric);
  p.n_train_ = train.size();
  const FrequencyProfile train_profile(train.labels);
  p.n_train_singleton_ = train_profile.distinct_with_count(1);

  // Label space: training classes, then observed labels missing from training.
  p.label_space_ = p.model_.class_index();
  std::vector<Label> unseen;
  for (Label y : observed_label_space(data.labels)) {
    if (!std::binary_search(p.model_.class_index().begin(), p.model_.class_index().end(), y)) {
      unseen.push_back(y);
    }
  }
  p.label_space_.insert(p.label_space_.end(), unseen.begin(), unseen.end());

  p.cal_scores_.reserve(split.cal.size());
  for (std::size_t i : split.cal) {
    const auto probs = p.extended_probs(data.features.row(i), rng);
    const auto it = std::find(p.label_space_.begin(), p.label_space_.end(), data.labels[i]);
    const auto pos = static_cast<std::size_t>(it - p.label_space_.begin());
    p.cal_scores_.push_back(aps_score(probs, pos, cfg.aps, rng));
  }
  p.cal_scores_sorted_ = p.cal_scores_;
  std::sort(p.cal_scores_sorted_.begin(), p.cal_scores_sorted_.end());
  return p;
}

std::vector<double> CalibratedPredictor::extended_probs(std::span<const double> x,
                                                        RandomSource& rng) const {
  const auto base = model_.predict_proba(x);
  const std::size_t unseen_count = label_space_.size() - model_.class_index().size();
  auto probs = smooth_unseen_probs(base, unseen_count, n_train_, n_train_singleton_, rng,
                                   cfg_.smoothing_noise_scale);
  // Strictly positive floor: labels outside the query's neighbor set would
  // otherwise carry probability exactly 0, making their adaptive scores
  // exactly 1 and immune to the randomization term; exact score ties between
  // such labels and fully-missed calibration points then cascade through the
  // >= rank counts. The floor keeps scores almost surely distinct.
  const double norm = 1.0 + kProbFloor * static_cast<double>(probs.size());
  for (double& p : probs) p = (p + kProbFloor) / norm;
  return probs;
}

std::vector<double> CalibratedPredictor::test_scores(std::span<const double> x,
                                                     RandomSource& rng) const {
  const auto probs = extended_probs(x, rng);
  const double u = cfg_.aps.randomized ? rng.uniform() : 0.0;
  std::vector<double> scores(label_space_.size());
  for (std::size_t pos = 0; pos < label_space_.size(); ++pos) {
    scores[pos] = aps_score_with_draw(probs, pos, cfg_.aps, u);
  }
  return scores;
}

std::vector<double> CalibratedPredictor::label_pvalues(std::span<const double> x,
                                                       RandomSource& rng) const {
  const auto scores = test_scores(x, rng);
  const std::size_t ncal = cal_scores_sorted_.size();
  std::vector<double> pvals(scores.size());
  for (std::size_t pos = 0; pos < scores.size(); ++pos) {
    const auto lower = std::lower_bound(cal_scores_sorted_.begin(), cal_scores_sorted_.end(),
                                        scores[pos]);
    const auto ge = static_cast<std::size_t>(cal_scores_sorted_.end() - lower);
    pvals[pos] = static_cast<double>(1 + ge) / static_cast<double>(1 + ncal);
  }
  return pvals;
}

PredictionSet CalibratedPredictor::predict(std::span<const double> x, double alpha,
                                           RandomSource& rng) const {
  const auto pvals = label_pvalues(x, rng);
  PredictionSet out;
  for (std::size_t pos = 0; pos < pvals.size(); ++pos) {
    if (pvals[pos] > alpha) out.seen.push_back(label_space_[pos]);
  }
  std::sort(out.seen.begin(), out.seen.end());
  return out;
}

PredictionSet plug_in_predict(const LabeledDataset& data, std::span<const double> x,
                              double alpha, const SplitIndices& split, const ApsConfig& cfg,
                              RandomSource& rng) {
  CalibratedPredictor::Config pcfg;
  pcfg.aps = cfg;
  const auto predictor = CalibratedPredictor::build(data, split, pcfg, rng);
  return predictor.predict(x, alpha, rng);
}

}  // namespace osc
