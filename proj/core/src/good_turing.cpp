#include "osc/good_turing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace osc {

namespace {

void check_k(std::size_t k, const FrequencyProfile& profile) {
  if (k > profile.sample_count()) {
    throw std::invalid_argument("frequency hypothesis index k out of range");
  }
}

}  // namespace

double gt_pvalue(std::size_t k, const FrequencyProfile& profile) {
  check_k(k, profile);
  const double m_next = static_cast<double>(profile.distinct_with_count(k + 1));
  const double n = static_cast<double>(profile.sample_count());
  return ((static_cast<double>(k) + 1.0) * m_next + static_cast<double>(k) + 1.0) / (n + 1.0);
}

double rgt_pvalue(std::size_t k, const FrequencyProfile& profile, RandomSource& rng) {
  check_k(k, profile);
  const std::size_t m_next = profile.distinct_with_count(k + 1);
  const std::uint64_t support = static_cast<std::uint64_t>((k + 1) * m_next + k) + 1;
  const double n = static_cast<double>(profile.sample_count());
  return (static_cast<double>(rng.uniform_int(support)) + 1.0) / (n + 1.0);
}

FrequencyScorer fit_frequency_scorer(std::size_t k, const LabeledDataset& data, int lof_k) {
  data.validate();
  const FrequencyProfile profile(data.labels);
  check_k(k, profile);

  // Keep indices whose label frequency is neither k nor k+1; this set is a
  // function of the unordered sample only.
  std::vector<std::size_t> keep;
  keep.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto c = static_cast<std::size_t>(profile.count(data.labels[i]));
    if (c != k && c != k + 1) keep.push_back(i);
  }

  FrequencyScorer out;
  out.k = k;
  out.training_size = keep.size();
  if (keep.size() < 2) {
    out.feature_blind_fallback = true;
    return out;
  }
  FeatureMatrix ref(0, 0);
  for (std::size_t i : keep) ref.append_row(data.features.row(i));
  out.scorer = OneClassScorer::fit(ref, lof_k);
  return out;
}

XgtResult xgt_pvalue(std::size_t k, const LabeledDataset& data, std::span<const double> x_test,
                     const FrequencyScorer& scorer) {
  if (scorer.k != k) throw std::invalid_argument("xgt_pvalue: scorer fitted for a different k");
  const FrequencyProfile profile(data.labels);
  check_k(k, profile);

  XgtResult out;
  out.vacuous = k >= 1 && profile.distinct_with_count(k) == 0;
  if (scorer.feature_blind_fallback) {
    out.value = gt_pvalue(k, profile);
    return out;
  }
  if (x_test.size() != data.dim()) throw std::invalid_argument("xgt_pvalue: dimension mismatch");

  const double s_test = scorer.scorer->score(x_test);
  const auto conforms = [&](std::size_t i) {
    return scorer.scorer->score(data.features.row(i)) >= s_test;
  };

  std::size_t count_next = 0;                           // over samples with frequency k+1
  std::unordered_map<Label, std::size_t> cohort_count;  // per frequency-k label
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto c = static_cast<std::size_t>(profile.count(data.labels[i]));
    if (c == k + 1) {
      if (conforms(i)) ++count_next;
    } else if (k >= 1 && c == k) {
      // The max over frequency-k indices reduces to a max over distinct
      // frequency-k labels; accumulate each label's cohort once.
      if (conforms(i)) ++cohort_count[data.labels[i]];
      else cohort_count.try_emplace(data.labels[i], 0);
    }
  }
  std::size_t worst_cohort = 0;
  for (const auto& [y, c] : cohort_count) worst_cohort = std::max(worst_cohort, c);

  const double n = static_cast<double>(data.size());
  out.value = (1.0 + static_cast<double>(count_next) + static_cast<double>(worst_cohort)) /
              (n + 1.0);
  return out;
}

PowerLawWeights power_law_weights(std::size_t n, double beta) {
  if (n < 1) throw std::invalid_argument("power_law_weights: n must be >= 1");
  if (beta <= 0.0) throw std::invalid_argument("power_law_weights: beta must be > 0");
  PowerLawWeights w;
  w.beta = beta;
  w.c.resize(n);
  double total = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    w.c[k - 1] = std::pow(static_cast<double>(k), -beta);
    total += w.c[k - 1];
  }
  for (double& c : w.c) c /= total;
  return w;
}

double seen_pvalue(const std::map<std::size_t, double>& pvalues,
                   const PowerLawWeights& weights) {
  if (pvalues.empty()) throw std::invalid_argument("seen_pvalue: no observed labels");
  double best = 0.0;
  for (const auto& [k, psi] : pvalues) {
    if (k < 1 || k > weights.c.size()) {
      throw std::invalid_argument("seen_pvalue: frequency outside weight range");
    }
    best = std::max(best, psi / weights.at(k));
  }
  return best;
}

}  // namespace osc
