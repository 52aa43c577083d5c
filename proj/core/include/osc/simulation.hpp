#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "osc/dataset.hpp"
#include "osc/open_set.hpp"
#include "osc/prediction_set.hpp"
#include "osc/random.hpp"

namespace osc {

// Dirichlet-process data generator (sequential Chinese-restaurant scheme).
// Label values drawn from the base distribution become fresh integer label
// ids; features are Gaussian around the label value in every coordinate.
struct DpConfig {
  double theta = 100.0;  // concentration; P(new label at step i) = theta/(theta+i-1)
  enum class Base { uniform01, standard_normal } base = Base::uniform01;
  double sigma2 = 5e-6;  // feature noise variance
  std::size_t dim = 3;
  std::size_t n = 500;

  void validate() const;
};

LabeledDataset dp_sample(const DpConfig& cfg, RandomSource& rng);

// theta / (theta + n); errors when theta = n = 0.
double new_label_probability(double theta, std::size_t n);

// Coverage rule: a seen true label must be in the set; a new true label is
// covered exactly when the joker is present.
bool evaluate_prediction(const PredictionSet& set, Label y_true,
                         std::span<const Label> seen_space);

// Frequency bins for stratified coverage. Bin 0 ("very rare") holds labels
// unseen or seen once; the remaining bins split by configurable boundaries.
struct FrequencyBins {
  std::array<long long, 3> upper = {1, 5, 20};  // bin i: count <= upper[i]; last bin beyond
  static constexpr std::size_t kCount = 4;

  std::size_t bin(long long count) const;
  static const char* name(std::size_t bin);
};

std::size_t frequency_bin(Label y_true, const FrequencyProfile& profile,
                          const FrequencyBins& bins = {});

enum class MethodKind {
  standard_random,
  standard_selective,
  cgtc_random,
  cgtc_selective,
};

enum class AllocationMode { fixed, tuned };

const char* method_name(MethodKind m);
const char* variant_name(PvalueVariant v);
std::optional<MethodKind> parse_method(const std::string& name);
std::optional<PvalueVariant> parse_variant(const std::string& name);

struct ExperimentSpec {
  // Data source: a DP configuration, or a fixed dataset (e.g. read from CSV)
  // re-partitioned into reference/test per repetition.
  std::optional<DpConfig> dp;
  std::optional<LabeledDataset> fixed_data;
  std::size_t reference_size = 500;

  MethodKind method = MethodKind::cgtc_random;
  PvalueVariant variant = PvalueVariant::xgt;
  double alpha = 0.1;
  AllocationMode allocation = AllocationMode::fixed;
  AlphaAllocation fixed_allocation;  // defaulted to thirds(alpha) when zero

  std::size_t reps = 20;
  std::size_t tests_per_rep = 200;
  std::uint64_t seed = 1;

  ClassifierConfig classifier;
  TuningConfig tuning;
  FrequencyBins bins;
  bool parallel = true;

  void validate() const;  // throws with the offending field path
};

struct MetricValue {
  double value = 0.0;
  double se = 0.0;
};

struct ExperimentMetrics {
  MetricValue coverage;
  MetricValue avg_cardinality;
  MetricValue joker_rate;
  // Miscoverage restricted to seen true labels: P(Y not in set, Y seen).
  MetricValue seen_miscoverage;
  std::array<MetricValue, FrequencyBins::kCount> stratified_coverage;
  std::array<std::size_t, FrequencyBins::kCount> bin_counts{};
  std::vector<AlphaAllocation> allocations;  // one per repetition
  std::size_t reps = 0;
  std::size_t tests_per_rep = 0;
};

ExperimentMetrics run_experiment(const ExperimentSpec& spec);

// Metrics CSV: one row per (method, theta, n, metric, value, se).
struct MetricsRow {
  std::string method;
  double theta = 0.0;
  std::size_t n = 0;
  std::string metric;
  double value = 0.0;
  double se = 0.0;
};

std::vector<MetricsRow> metrics_rows(const ExperimentSpec& spec,
                                     const ExperimentMetrics& metrics);
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);

}  // namespace osc
