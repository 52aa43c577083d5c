#include "osc/open_set.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace osc {

void AlphaAllocation::validate(double alpha) const {
  for (double a : {alpha_class, alpha_unseen, alpha_seen}) {
    if (a < 0.0 || a > 1.0) {
      throw std::invalid_argument("allocation components must lie in [0, 1]");
    }
  }
  if (std::fabs(total() - alpha) > 1e-12) {
    throw std::invalid_argument("allocation components must sum to alpha");
  }
}

PredictionSet apply_joker_rule(PredictionSet closed, double psi_unseen, double psi_seen,
                               const AlphaAllocation& allocation) {
  const bool reject_unseen = psi_unseen <= allocation.alpha_unseen;
  const bool reject_seen = psi_seen <= allocation.alpha_seen;
  if (reject_unseen && !reject_seen) {
    closed.joker = false;
    return closed;
  }
  if (!reject_unseen && reject_seen) {
    return PredictionSet{{}, true};
  }
  closed.joker = true;
  return closed;
}

PredictionSet cgtc_predict(std::span<const double> x, const AlphaAllocation& allocation,
                           const OpenSetComponents& components, RandomSource& rng) {
  auto unseen_rng = rng.fork("unseen");
  auto seen_rng = rng.fork("seen");
  auto closed_rng = rng.fork("closed");
  const double psi_unseen = components.unseen_pvalue(x, unseen_rng);
  const double psi_seen = components.seen_pvalue(x, seen_rng);
  PredictionSet closed = components.closed_set(x, allocation.alpha_class, closed_rng);
  return apply_joker_rule(std::move(closed), psi_unseen, psi_seen, allocation);
}

double allocation_loss(const PredictionSet& set, Label y_true, std::size_t baseline_size,
                       std::span<const Label> seen_space, double lambda) {
  if (baseline_size == 0) throw std::invalid_argument("allocation_loss: baseline_size is 0");
  const bool y_seen = std::binary_search(seen_space.begin(), seen_space.end(), y_true);
  const double size_term = static_cast<double>(cardinality(set)) /
                           static_cast<double>(baseline_size);
  const double joker_penalty = (set.joker && y_seen) ? 1.0 : 0.0;
  return lambda * size_term + (1.0 - lambda) * joker_penalty;
}

OpenSetClassifier OpenSetClassifier::build(const LabeledDataset& reference,
                                           const ClassifierConfig& cfg,
                                           PvalueVariant unseen_variant, RandomSource& rng) {
  reference.validate();
  if (reference.size() == 0) throw std::invalid_argument("classifier: empty reference data");

  OpenSetClassifier clf;
  clf.cfg_ = cfg;
  clf.variant_ = unseen_variant;
  clf.reference_ = reference;
  clf.profile_ = FrequencyProfile(reference.labels);

  const std::size_t n = reference.size();
  const auto n_cal = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.cal_fraction * static_cast<double>(n))));
  auto split_rng = rng.fork("split");
  if (cfg.split == SplitStrategy::selective) {
    const auto policy = make_policy(n, clf.profile_, n_cal);
    clf.split_ = selective_split(reference.labels, policy, split_rng);
  } else {
    clf.split_.idx = random_split(n, n_cal, split_rng);
    clf.split_.policy = InclusionPolicy::constant(cfg.cal_fraction);
  }
  if (clf.split_.idx.train.empty()) {
    throw std::runtime_error("classifier: split left no training samples");
  }

  CalibratedPredictor::Config pcfg;
  pcfg.knn_k = cfg.knn_k;
  pcfg.metric = cfg.metric;
  pcfg.aps = cfg.aps;
  pcfg.smoothing_noise_scale = cfg.smoothing_noise_scale;
  auto aps_rng = rng.fork("aps");
  clf.predictor_ = CalibratedPredictor::build(reference, clf.split_.idx, pcfg, aps_rng);

  clf.seen_weights_ = power_law_weights(n, cfg.beta);
  clf.observed_frequencies_ = clf.profile_.observed_frequencies();

  if (unseen_variant == PvalueVariant::xgt) {
    clf.unseen_scorer_ = fit_frequency_scorer(0, reference, cfg.lof_k);
    if (!clf.unseen_scorer_.feature_blind_fallback) {
      for (std::size_t i = 0; i < n; ++i) {
        if (clf.profile_.count(reference.labels[i]) == 1) {
          clf.singleton_scores_.push_back(
              clf.unseen_scorer_.scorer->score(reference.features.row(i)));
        }
      }
    }
  }
  return clf;
}

double OpenSetClassifier::unseen_pvalue(std::span<const double> x, RandomSource& rng) const {
  switch (variant_) {
    case PvalueVariant::gt:
      return gt_pvalue(0, profile_);
    case PvalueVariant::rgt:
      return rgt_pvalue(0, profile_, rng);
    case PvalueVariant::xgt: {
      if (unseen_scorer_.feature_blind_fallback) return gt_pvalue(0, profile_);
      const double s_test = unseen_scorer_.scorer->score(x);
      std::size_t ge = 0;
      for (double s : singleton_scores_) {
        if (s >= s_test) ++ge;
      }
      return static_cast<double>(1 + ge) /
             static_cast<double>(profile_.sample_count() + 1);
    }
  }
  throw std::logic_error("unknown p-value variant");
}

double OpenSetClassifier::seen_pvalue(RandomSource& rng) const {
  std::map<std::size_t, double> pvals;
  for (std::size_t k : observed_frequencies_) {
    pvals[k] = rgt_pvalue(k, profile_, rng);
  }
  return osc::seen_pvalue(pvals, seen_weights_);
}

std::vector<double> OpenSetClassifier::closed_set_pvalues(std::span<const double> x,
                                                          RandomSource& rng) const {
  if (cfg_.split == SplitStrategy::selective) {
    return weighted_label_pvalues(x, reference_, split_, split_.policy, predictor_, rng);
  }
  return predictor_.label_pvalues(x, rng);
}

PredictionSet OpenSetClassifier::closed_set(std::span<const double> x, double alpha,
                                            RandomSource& rng) const {
  const auto pvals = closed_set_pvalues(x, rng);
  PredictionSet out;
  const auto& labels = seen_labels();
  for (std::size_t pos = 0; pos < pvals.size(); ++pos) {
    if (pvals[pos] > alpha) out.seen.push_back(labels[pos]);
  }
  std::sort(out.seen.begin(), out.seen.end());
  return out;
}

PredictionSet OpenSetClassifier::predict(std::span<const double> x,
                                         const AlphaAllocation& allocation,
                                         RandomSource& rng) const {
  auto unseen_rng = rng.fork("unseen");
  auto seen_rng = rng.fork("seen");
  auto closed_rng = rng.fork("closed");
  const double psi_unseen = unseen_pvalue(x, unseen_rng);
  const double psi_seen = seen_pvalue(seen_rng);
  PredictionSet closed = closed_set(x, allocation.alpha_class, closed_rng);
  return apply_joker_rule(std::move(closed), psi_unseen, psi_seen, allocation);
}

namespace {

struct FoldPoint {
  std::vector<double> sorted_pvalues;  // ascending closed-set p-values
  double psi_unseen = 1.0;
  double psi_seen = 1.0;
  bool y_seen = false;
  std::size_t baseline_size = 1;
};

std::size_t set_size_at(const std::vector<double>& sorted_pvalues, double alpha) {
  const auto it = std::upper_bound(sorted_pvalues.begin(), sorted_pvalues.end(), alpha);
  return static_cast<std::size_t>(sorted_pvalues.end() - it);
}

}  // namespace

AlphaAllocation tune_allocation(const LabeledDataset& data, double alpha,
                                const TuningConfig& cfg, RandomSource& rng) {
  data.validate();
  if (alpha <= 0.0 || alpha >= 1.0) {
    throw std::invalid_argument("tune_allocation: alpha must be in (0,1)");
  }
  const std::size_t n = data.size();
  auto folds = static_cast<std::size_t>(std::max(cfg.folds, 2));
  if (n / folds < 10) {
    const std::size_t reduced = std::max<std::size_t>(2, n / 10);
    if (reduced < folds) {
      std::cerr << "tune_allocation: reducing folds from " << folds << " to " << reduced
                << " (each fold needs >= 10 points)\n";
      folds = reduced;
    }
  }
  if (n < 2 * 10) throw std::invalid_argument("tune_allocation: too few samples for tuning");

  std::vector<double> seen_candidates;
  for (double a : cfg.alpha_seen_candidates) {
    if (a >= 0.0 && a < alpha) seen_candidates.push_back(a);
  }
  if (seen_candidates.empty()) {
    throw std::invalid_argument("tune_allocation: no feasible alpha_seen candidate");
  }

  // One fold partition, reused across the whole grid.
  auto fold_rng = rng.fork("folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(fold_rng.uniform_int(n - i));
    std::swap(order[i], order[j]);
  }

  // Per-fold classifier fit and per-point statistics are allocation-free, so
  // the grid search below touches only precomputed values.
  std::vector<std::vector<FoldPoint>> fold_points(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> val_idx, ref_idx;
    for (std::size_t pos = 0; pos < n; ++pos) {
      (pos % folds == f ? val_idx : ref_idx).push_back(order[pos]);
    }
    const LabeledDataset ref = data.subset(ref_idx);
    auto build_rng = rng.fork("fold-build").fork(f);
    const auto clf = OpenSetClassifier::build(ref, cfg.classifier, cfg.variant, build_rng);
    const auto ref_space = observed_label_space(ref.labels);

    fold_points[f].reserve(val_idx.size());
    for (std::size_t v = 0; v < val_idx.size(); ++v) {
      const std::size_t i = val_idx[v];
      auto point_rng = rng.fork("fold-eval").fork(f).fork(v);
      const auto x = data.features.row(i);
      FoldPoint p;
      auto unseen_rng = point_rng.fork("unseen");
      auto seen_rng = point_rng.fork("seen");
      auto closed_rng = point_rng.fork("closed");
      p.psi_unseen = clf.unseen_pvalue(x, unseen_rng);
      p.psi_seen = clf.seen_pvalue(seen_rng);
      p.sorted_pvalues = clf.closed_set_pvalues(x, closed_rng);
      std::sort(p.sorted_pvalues.begin(), p.sorted_pvalues.end());
      p.y_seen = std::binary_search(ref_space.begin(), ref_space.end(), data.labels[i]);
      p.baseline_size = std::max<std::size_t>(1, set_size_at(p.sorted_pvalues, alpha));
      fold_points[f].push_back(std::move(p));
    }
  }

  const double lambda = cfg.lambda;
  bool have_best = false;
  double best_loss = 0.0;
  AlphaAllocation best;
  for (double alpha_seen : seen_candidates) {
    const double remaining = alpha - alpha_seen;
    for (double alpha_class = cfg.alpha_class_start; alpha_class <= remaining + 1e-12;
         alpha_class += cfg.alpha_class_step) {
      const double alpha_unseen = remaining - alpha_class;
      if (alpha_unseen < -1e-12) break;

      double loss_sum = 0.0;
      std::size_t fold_count = 0;
      for (const auto& points : fold_points) {
        if (points.empty()) continue;
        double fold_loss = 0.0;
        for (const auto& p : points) {
          const std::size_t size_class = set_size_at(p.sorted_pvalues, alpha_class);
          const bool reject_unseen = p.psi_unseen <= alpha_unseen;
          const bool reject_seen = p.psi_seen <= alpha_seen;
          std::size_t card;
          bool joker;
          if (reject_unseen && !reject_seen) {
            card = size_class;
            joker = false;
          } else if (!reject_unseen && reject_seen) {
            card = 1;
            joker = true;
          } else {
            card = size_class + 1;
            joker = true;
          }
          const double size_term = static_cast<double>(card) /
                                   static_cast<double>(p.baseline_size);
          fold_loss += lambda * size_term + (1.0 - lambda) * ((joker && p.y_seen) ? 1.0 : 0.0);
        }
        loss_sum += fold_loss / static_cast<double>(points.size());
        ++fold_count;
      }
      const double loss = loss_sum / static_cast<double>(fold_count);

      const AlphaAllocation candidate{alpha_class, std::max(alpha_unseen, 0.0), alpha_seen};
      const bool better =
          !have_best || loss < best_loss - 1e-12 ||
          (std::fabs(loss - best_loss) <= 1e-12 &&
           (candidate.alpha_class > best.alpha_class + 1e-15 ||
            (std::fabs(candidate.alpha_class - best.alpha_class) <= 1e-15 &&
             candidate.alpha_unseen > best.alpha_unseen)));
      if (better) {
        have_best = true;
        best_loss = loss;
        best = candidate;
      }
    }
  }
  if (!have_best) throw std::invalid_argument("tune_allocation: empty alpha_class grid");
  return best;
}

}  // namespace osc
