#include "osc/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "osc/dataset_io.hpp"

namespace osc {

void DpConfig::validate() const {
  if (theta < 0.0) throw std::invalid_argument("dp.theta: must be >= 0");
  if (sigma2 <= 0.0) throw std::invalid_argument("dp.sigma2: must be > 0");
  if (dim < 1) throw std::invalid_argument("dp.dim: must be >= 1");
}

LabeledDataset dp_sample(const DpConfig& cfg, RandomSource& rng) {
  cfg.validate();
  LabeledDataset data;
  data.features = FeatureMatrix(0, 0);
  data.labels.reserve(cfg.n);
  std::vector<double> label_value;  // base draw per label id
  const double sigma = std::sqrt(cfg.sigma2);

  std::vector<double> row(cfg.dim);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const bool innovate =
        i == 0 || rng.uniform() < cfg.theta / (cfg.theta + static_cast<double>(i));
    Label y;
    if (innovate) {
      const double value = cfg.base == DpConfig::Base::uniform01 ? rng.uniform()
                                                                 : rng.normal(0.0, 1.0);
      y = static_cast<Label>(label_value.size());
      label_value.push_back(value);
      data.label_names.push_back(format_double(value));
    } else {
      // Copying a uniformly chosen previous draw reproduces the
      // count-proportional reuse probabilities.
      y = data.labels[static_cast<std::size_t>(rng.uniform_int(i))];
    }
    data.labels.push_back(y);
    const double mean = label_value[static_cast<std::size_t>(y)];
    for (std::size_t j = 0; j < cfg.dim; ++j) row[j] = rng.normal(mean, sigma);
    data.features.append_row(row);
  }
  return data;
}

double new_label_probability(double theta, std::size_t n) {
  if (theta < 0.0) throw std::invalid_argument("theta must be >= 0");
  if (theta == 0.0 && n == 0) {
    throw std::invalid_argument("new_label_probability undefined for theta = n = 0");
  }
  return theta / (theta + static_cast<double>(n));
}

bool evaluate_prediction(const PredictionSet& set, Label y_true,
                         std::span<const Label> seen_space) {
  const bool seen = std::binary_search(seen_space.begin(), seen_space.end(), y_true);
  if (seen) return set.contains(y_true);
  return set.joker;
}

std::size_t FrequencyBins::bin(long long count) const {
  for (std::size_t b = 0; b < upper.size(); ++b) {
    if (count <= upper[b]) return b;
  }
  return upper.size();
}

const char* FrequencyBins::name(std::size_t bin) {
  static constexpr const char* names[kCount] = {"very_rare", "rare", "medium", "frequent"};
  return names[bin];
}

std::size_t frequency_bin(Label y_true, const FrequencyProfile& profile,
                          const FrequencyBins& bins) {
  return bins.bin(profile.count(y_true));
}

const char* method_name(MethodKind m) {
  switch (m) {
    case MethodKind::standard_random: return "standard-random";
    case MethodKind::standard_selective: return "standard-selective";
    case MethodKind::cgtc_random: return "cgtc-random";
    case MethodKind::cgtc_selective: return "cgtc-selective";
  }
  return "?";
}

const char* variant_name(PvalueVariant v) {
  switch (v) {
    case PvalueVariant::gt: return "GT";
    case PvalueVariant::rgt: return "RGT";
    case PvalueVariant::xgt: return "XGT";
  }
  return "?";
}

std::optional<MethodKind> parse_method(const std::string& name) {
  for (MethodKind m : {MethodKind::standard_random, MethodKind::standard_selective,
                       MethodKind::cgtc_random, MethodKind::cgtc_selective}) {
    if (name == method_name(m)) return m;
  }
  return std::nullopt;
}

std::optional<PvalueVariant> parse_variant(const std::string& name) {
  for (PvalueVariant v : {PvalueVariant::gt, PvalueVariant::rgt, PvalueVariant::xgt}) {
    if (name == variant_name(v)) return v;
  }
  return std::nullopt;
}

void ExperimentSpec::validate() const {
  if (dp.has_value() == fixed_data.has_value()) {
    throw std::invalid_argument("data: exactly one of dp / fixed_data must be set");
  }
  if (dp) dp->validate();
  if (alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("alpha: must be in (0,1)");
  if (reps < 1) throw std::invalid_argument("reps: must be >= 1");
  if (tests_per_rep < 1) throw std::invalid_argument("tests: must be >= 1");
  if (reference_size < 2) throw std::invalid_argument("n: reference size must be >= 2");
  if (fixed_data && fixed_data->size() < reference_size + tests_per_rep) {
    throw std::invalid_argument("data: need at least n + tests rows");
  }
  const bool is_cgtc = method == MethodKind::cgtc_random || method == MethodKind::cgtc_selective;
  if (is_cgtc && allocation == AllocationMode::fixed && fixed_allocation.total() != 0.0) {
    fixed_allocation.validate(alpha);
  }
}

namespace {

struct RepResult {
  double coverage = 0.0;
  double cardinality = 0.0;
  double joker_rate = 0.0;
  double seen_miscoverage = 0.0;
  std::array<double, FrequencyBins::kCount> bin_coverage{};
  std::array<std::size_t, FrequencyBins::kCount> bin_count{};
  AlphaAllocation allocation;
};

bool is_cgtc(MethodKind m) {
  return m == MethodKind::cgtc_random || m == MethodKind::cgtc_selective;
}

bool is_selective(MethodKind m) {
  return m == MethodKind::standard_selective || m == MethodKind::cgtc_selective;
}

RepResult run_one_rep(const ExperimentSpec& spec, std::size_t rep) {
  RandomSource master(spec.seed);
  auto rep_rng = master.fork("rep").fork(rep);

  // Reference sample plus test points from the same exchangeable sequence.
  LabeledDataset all;
  if (spec.dp) {
    DpConfig cfg = *spec.dp;
    cfg.n = spec.reference_size + spec.tests_per_rep;
    auto dp_rng = rep_rng.fork("dp");
    all = dp_sample(cfg, dp_rng);
  } else {
    const std::size_t total = spec.fixed_data->size();
    auto shuffle_rng = rep_rng.fork("shuffle");
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i + 1 < total; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(shuffle_rng.uniform_int(total - i));
      std::swap(order[i], order[j]);
    }
    order.resize(spec.reference_size + spec.tests_per_rep);
    all = spec.fixed_data->subset(order);
  }

  std::vector<std::size_t> ref_idx(spec.reference_size);
  std::iota(ref_idx.begin(), ref_idx.end(), 0);
  const LabeledDataset reference = all.subset(ref_idx);

  ClassifierConfig cfg = spec.classifier;
  cfg.split = is_selective(spec.method) ? SplitStrategy::selective
                                        : SplitStrategy::random_uniform;
  auto build_rng = rep_rng.fork("clf");
  const auto clf = OpenSetClassifier::build(reference, cfg, spec.variant, build_rng);

  RepResult out;
  if (is_cgtc(spec.method)) {
    if (spec.allocation == AllocationMode::tuned) {
      TuningConfig tcfg = spec.tuning;
      tcfg.classifier = cfg;
      tcfg.variant = spec.variant;
      auto tune_rng = rep_rng.fork("tune");
      out.allocation = tune_allocation(reference, spec.alpha, tcfg, tune_rng);
    } else {
      out.allocation = spec.fixed_allocation.total() == 0.0
                           ? AlphaAllocation::thirds(spec.alpha)
                           : spec.fixed_allocation;
    }
  }

  const auto& seen_space = clf.seen_labels();
  for (std::size_t t = 0; t < spec.tests_per_rep; ++t) {
    const std::size_t i = spec.reference_size + t;
    const auto x = all.features.row(i);
    const Label y = all.labels[i];
    auto point_rng = rep_rng.fork("test").fork(t);

    PredictionSet set;
    if (is_cgtc(spec.method)) {
      set = clf.predict(x, out.allocation, point_rng);
    } else {
      auto closed_rng = point_rng.fork("closed");
      set = clf.closed_set(x, spec.alpha, closed_rng);
    }

    const bool covered = evaluate_prediction(set, y, seen_space);
    const bool y_seen = std::binary_search(seen_space.begin(), seen_space.end(), y);
    out.coverage += covered ? 1.0 : 0.0;
    out.cardinality += static_cast<double>(cardinality(set));
    out.joker_rate += set.joker ? 1.0 : 0.0;
    out.seen_miscoverage += (y_seen && !set.contains(y)) ? 1.0 : 0.0;
    const std::size_t b = frequency_bin(y, clf.profile(), spec.bins);
    out.bin_coverage[b] += covered ? 1.0 : 0.0;
    ++out.bin_count[b];
  }

  const auto tests = static_cast<double>(spec.tests_per_rep);
  out.coverage /= tests;
  out.cardinality /= tests;
  out.joker_rate /= tests;
  out.seen_miscoverage /= tests;
  for (std::size_t b = 0; b < FrequencyBins::kCount; ++b) {
    if (out.bin_count[b] > 0) out.bin_coverage[b] /= static_cast<double>(out.bin_count[b]);
  }
  return out;
}

MetricValue summarize(const std::vector<double>& rep_means) {
  MetricValue m;
  const std::size_t r = rep_means.size();
  if (r == 0) return m;
  m.value = std::accumulate(rep_means.begin(), rep_means.end(), 0.0) / static_cast<double>(r);
  if (r > 1) {
    double ss = 0.0;
    for (double v : rep_means) ss += (v - m.value) * (v - m.value);
    m.se = std::sqrt(ss / static_cast<double>(r - 1)) / std::sqrt(static_cast<double>(r));
  }
  return m;
}

}  // namespace

ExperimentMetrics run_experiment(const ExperimentSpec& spec) {
  spec.validate();

  std::vector<RepResult> results(spec.reps);
  if (spec.parallel && spec.reps > 1) {
    std::atomic<std::size_t> next{0};
    const unsigned workers =
        std::min<unsigned>(std::thread::hardware_concurrency(),
                           static_cast<unsigned>(spec.reps));
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned w = 0; w < std::max(1u, workers); ++w) {
      pool.emplace_back([&] {
        for (std::size_t rep = next.fetch_add(1); rep < spec.reps; rep = next.fetch_add(1)) {
          try {
            results[rep] = run_one_rep(spec, rep);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  } else {
    for (std::size_t rep = 0; rep < spec.reps; ++rep) results[rep] = run_one_rep(spec, rep);
  }

  ExperimentMetrics metrics;
  metrics.reps = spec.reps;
  metrics.tests_per_rep = spec.tests_per_rep;

  std::vector<double> coverage, card, joker, miscov;
  for (const auto& r : results) {
    coverage.push_back(r.coverage);
    card.push_back(r.cardinality);
    joker.push_back(r.joker_rate);
    miscov.push_back(r.seen_miscoverage);
    metrics.allocations.push_back(r.allocation);
  }
  metrics.coverage = summarize(coverage);
  metrics.avg_cardinality = summarize(card);
  metrics.joker_rate = summarize(joker);
  metrics.seen_miscoverage = summarize(miscov);

  for (std::size_t b = 0; b < FrequencyBins::kCount; ++b) {
    std::vector<double> bin_means;
    for (const auto& r : results) {
      if (r.bin_count[b] > 0) {
        bin_means.push_back(r.bin_coverage[b]);
        metrics.bin_counts[b] += r.bin_count[b];
      }
    }
    metrics.stratified_coverage[b] = summarize(bin_means);
  }
  return metrics;
}

std::vector<MetricsRow> metrics_rows(const ExperimentSpec& spec,
                                     const ExperimentMetrics& metrics) {
  std::vector<MetricsRow> rows;
  const std::string method = method_name(spec.method);
  const double theta = spec.dp ? spec.dp->theta : 0.0;
  const std::size_t n = spec.reference_size;
  const auto add = [&](const std::string& name, const MetricValue& m) {
    rows.push_back({method, theta, n, name, m.value, m.se});
  };
  add("coverage", metrics.coverage);
  add("avg_size", metrics.avg_cardinality);
  add("joker_rate", metrics.joker_rate);
  add("seen_miscoverage", metrics.seen_miscoverage);
  for (std::size_t b = 0; b < FrequencyBins::kCount; ++b) {
    if (metrics.bin_counts[b] > 0) {
      add(std::string("coverage_") + FrequencyBins::name(b), metrics.stratified_coverage[b]);
    }
  }
  if (spec.allocation == AllocationMode::tuned) {
    std::vector<double> ac, au, as;
    for (const auto& a : metrics.allocations) {
      ac.push_back(a.alpha_class);
      au.push_back(a.alpha_unseen);
      as.push_back(a.alpha_seen);
    }
    add("alpha_class", summarize(ac));
    add("alpha_unseen", summarize(au));
    add("alpha_seen", summarize(as));
  }
  return rows;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics file: " + path);
  out << "method,theta,n,metric,value,se\n";
  for (const auto& r : rows) {
    out << r.method << "," << format_double(r.theta) << "," << r.n << "," << r.metric << ","
        << format_double(r.value) << "," << format_double(r.se) << "\n";
  }
  if (!out) throw std::runtime_error("i/o failure while writing " + path);
}

}  // namespace osc
