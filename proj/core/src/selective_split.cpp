#include "osc/selective_split.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace osc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Adds e * log(base) to acc, treating a zero exponent as a skipped factor.
void add_power(double& acc, long long e, double base) {
  if (e == 0) return;
  if (base <= 0.0) {
    acc = kNegInf;
    return;
  }
  acc += static_cast<double>(e) * std::log(base);
}

std::vector<double> normalize_log_weights(const std::vector<double>& log_w) {
  double max_log = kNegInf;
  for (double lw : log_w) max_log = std::max(max_log, lw);
  if (max_log == kNegInf) {
    throw std::runtime_error("degenerate policy: every swap configuration has probability 0");
  }
  double total = 0.0;
  std::vector<double> out(log_w.size(), 0.0);
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    if (log_w[i] == kNegInf) continue;
    out[i] = std::exp(log_w[i] - max_log);
    total += out[i];
  }
  for (double& w : out) w /= total;
  return out;
}

struct SplitFrequencies {
  std::unordered_map<Label, long long> total;  // N(l) over all n labels
  std::unordered_map<Label, long long> cal;    // f_cal(l)
  std::unordered_map<Label, long long> train;  // f_train(l)

  long long total_of(Label l) const {
    auto it = total.find(l);
    return it == total.end() ? 0 : it->second;
  }
  long long cal_of(Label l) const {
    auto it = cal.find(l);
    return it == cal.end() ? 0 : it->second;
  }
  long long train_of(Label l) const {
    auto it = train.find(l);
    return it == train.end() ? 0 : it->second;
  }
};

SplitFrequencies split_frequencies(std::span<const Label> labels, const SplitIndices& idx) {
  SplitFrequencies f;
  for (Label y : labels) ++f.total[y];
  for (std::size_t i : idx.cal) ++f.cal[labels[i]];
  for (std::size_t i : idx.train) ++f.train[labels[i]];
  return f;
}

// Whether the unswapped configuration has positive probability.
bool base_config_positive(const SplitFrequencies& f, const InclusionPolicy& policy) {
  for (const auto& [l, n] : f.total) {
    const double p = policy.pi(static_cast<std::size_t>(n));
    if (f.cal_of(l) > 0 && p <= 0.0) return false;
    if (f.train_of(l) > 0 && p >= 1.0) return false;
  }
  return true;
}

// log p~(j) for a swap with a calibration point labeled l != y; both labels'
// factors change, everything else cancels against the unswapped configuration.
double log_ratio_for(Label l, Label y, const SplitFrequencies& f,
                     const InclusionPolicy& policy) {
  const auto n_l = static_cast<std::size_t>(f.total_of(l));
  const auto n_y = static_cast<std::size_t>(f.total_of(y));
  double num = 0.0;
  add_power(num, f.cal_of(l) - 1, policy.pi(n_l - 1));
  add_power(num, f.train_of(l), 1.0 - policy.pi(n_l - 1));
  add_power(num, f.cal_of(y) + 1, policy.pi(n_y + 1));
  add_power(num, f.train_of(y), 1.0 - policy.pi(n_y + 1));
  if (num == kNegInf) return kNegInf;

  double den = 0.0;
  add_power(den, f.cal_of(l), policy.pi(n_l));
  add_power(den, f.train_of(l), 1.0 - policy.pi(n_l));
  add_power(den, f.cal_of(y), policy.pi(n_y));
  add_power(den, f.train_of(y), 1.0 - policy.pi(n_y));
  return num - den;
}

ConformalizationWeights fast_with_context(Label y, std::span<const Label> labels,
                                          const SplitIndices& idx,
                                          const SplitFrequencies& freqs,
                                          const InclusionPolicy& policy) {
  std::unordered_map<Label, double> ratio_cache;
  std::vector<double> log_w(idx.cal.size() + 1, 0.0);  // last entry: no swap
  for (std::size_t j = 0; j < idx.cal.size(); ++j) {
    const Label l = labels[idx.cal[j]];
    if (l == y) continue;  // identity swap, ratio 1
    auto [it, inserted] = ratio_cache.try_emplace(l, 0.0);
    if (inserted) it->second = log_ratio_for(l, y, freqs, policy);
    log_w[j] = it->second;
  }
  const auto w = normalize_log_weights(log_w);
  ConformalizationWeights out;
  out.cal.assign(w.begin(), w.end() - 1);
  out.test = w.back();
  return out;
}

}  // namespace

SplitIndices random_split(std::size_t n, std::size_t cal_size, RandomSource& rng) {
  if (cal_size > n) throw std::invalid_argument("random_split: cal_size exceeds n");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < cal_size; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(n - i));
    std::swap(order[i], order[j]);
  }
  SplitIndices out;
  out.cal.assign(order.begin(), order.begin() + cal_size);
  out.train.assign(order.begin() + cal_size, order.end());
  std::sort(out.cal.begin(), out.cal.end());
  std::sort(out.train.begin(), out.train.end());
  return out;
}

InclusionPolicy make_policy(std::size_t n, const FrequencyProfile& profile,
                            std::size_t n_cal) {
  if (n_cal < 1 || n_cal > n) {
    throw std::invalid_argument("make_policy: n_cal must be in [1, n]");
  }
  double p1 = static_cast<double>(profile.distinct_with_count(1)) / static_cast<double>(n);
  p1 = std::clamp(p1, 0.0, 1.0 - 1.0 / static_cast<double>(n));
  const double pi_common =
      std::min(static_cast<double>(n_cal) / (static_cast<double>(n) * (1.0 - p1)), 1.0);
  return InclusionPolicy(0.0, pi_common);
}

SplitAssignment selective_split(std::span<const Label> labels, const InclusionPolicy& policy,
                                RandomSource& rng) {
  const FrequencyProfile profile(labels);
  SplitAssignment out;
  out.policy = policy;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto k = static_cast<std::size_t>(profile.count(labels[i]));
    if (rng.bernoulli(policy.pi(k))) {
      out.idx.cal.push_back(i);
    } else {
      out.idx.train.push_back(i);
    }
  }
  return out;
}

ConformalizationWeights weights_naive(Label y, std::span<const Label> labels,
                                      const SplitAssignment& split,
                                      const InclusionPolicy& policy) {
  const std::size_t n = labels.size();
  std::vector<bool> in_cal(n, false);
  for (std::size_t i : split.idx.cal) in_cal[i] = true;

  std::unordered_map<Label, long long> base_counts;
  for (Label l : labels) ++base_counts[l];

  // Configuration index c in [0, |cal|) swaps the test point with cal point c;
  // the final configuration is the unswapped one.
  const std::size_t n_configs = split.idx.cal.size() + 1;
  std::vector<double> log_w(n_configs, 0.0);
  for (std::size_t c = 0; c < n_configs; ++c) {
    const bool swapped = c < split.idx.cal.size();
    const std::size_t j = swapped ? split.idx.cal[c] : n;
    const Label y_j = swapped ? labels[j] : y;
    const bool changes = swapped && y_j != y;

    double acc = 0.0;
    for (std::size_t i = 0; i < n && acc != kNegInf; ++i) {
      const Label l = (swapped && i == j) ? y : labels[i];
      long long freq = base_counts[l];
      if (changes) {
        if (l == y) freq += 1;
        if (l == y_j) freq -= 1;
      }
      const double p = policy.pi(static_cast<std::size_t>(freq));
      add_power(acc, 1, in_cal[i] ? p : 1.0 - p);
    }
    log_w[c] = acc;
  }

  const auto w = normalize_log_weights(log_w);
  ConformalizationWeights out;
  out.cal.assign(w.begin(), w.end() - 1);
  out.test = w.back();
  return out;
}

ConformalizationWeights weights_fast(Label y, std::span<const Label> labels,
                                     const SplitAssignment& split,
                                     const InclusionPolicy& policy) {
  const auto freqs = split_frequencies(labels, split.idx);
  if (!base_config_positive(freqs, policy)) {
    // Ratios to the unswapped configuration are undefined.
    return weights_naive(y, labels, split, policy);
  }
  return fast_with_context(y, labels, split.idx, freqs, policy);
}

std::vector<double> weighted_label_pvalues(std::span<const double> x,
                                           const LabeledDataset& data,
                                           const SplitAssignment& split,
                                           const InclusionPolicy& policy,
                                           const CalibratedPredictor& predictor,
                                           RandomSource& rng) {
  const auto& labels = predictor.label_space();
  const auto scores = predictor.test_scores(x, rng);
  const auto& cal_scores = predictor.calibration_scores();
  if (cal_scores.size() != split.idx.cal.size()) {
    throw std::invalid_argument("weighted_label_pvalues: predictor/split mismatch");
  }

  const auto freqs = split_frequencies(data.labels, split.idx);
  const bool fast_ok = base_config_positive(freqs, policy);

  std::vector<double> pvals(labels.size());
  for (std::size_t pos = 0; pos < labels.size(); ++pos) {
    const auto w = fast_ok
                       ? fast_with_context(labels[pos], data.labels, split.idx, freqs, policy)
                       : weights_naive(labels[pos], data.labels, split, policy);
    double p = w.test;
    for (std::size_t j = 0; j < cal_scores.size(); ++j) {
      if (cal_scores[j] >= scores[pos]) p += w.cal[j];
    }
    pvals[pos] = p;
  }
  return pvals;
}

PredictionSet weighted_predict(std::span<const double> x, const LabeledDataset& data,
                               const SplitAssignment& split, const InclusionPolicy& policy,
                               const CalibratedPredictor& predictor, double alpha,
                               RandomSource& rng) {
  const auto pvals = weighted_label_pvalues(x, data, split, policy, predictor, rng);
  const auto& labels = predictor.label_space();
  PredictionSet out;
  for (std::size_t pos = 0; pos < pvals.size(); ++pos) {
    if (pvals[pos] > alpha) out.seen.push_back(labels[pos]);
  }
  std::sort(out.seen.begin(), out.seen.end());
  return out;
}

}  // namespace osc
