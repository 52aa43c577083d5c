// Conformalization-weight benchmarks: the naive full-product path against the
// O(n) ratio shortcut, across sample sizes.
#include <benchmark/benchmark.h>

#include <vector>

#include "osc/dataset.hpp"
#include "osc/knn.hpp"
#include "osc/lof.hpp"
#include "osc/random.hpp"
#include "osc/selective_split.hpp"

using namespace osc;

namespace {

struct Instance {
  std::vector<Label> labels;
  SplitAssignment split;
  InclusionPolicy policy;
  Label candidate;
};

Instance make_instance(std::size_t n) {
  RandomSource rng(1234);
  std::vector<Label> labels(n);
  for (auto& y : labels) y = static_cast<Label>(rng.uniform_int(n / 10 + 2));
  const auto profile = frequency_profile(labels);
  Instance inst;
  inst.labels = std::move(labels);
  inst.policy = make_policy(n, profile, n / 10);
  inst.split = selective_split(inst.labels, inst.policy, rng);
  inst.candidate = inst.labels[0];
  return inst;
}

}  // namespace

static void BM_WeightsNaive(benchmark::State& state) {
  const auto inst = make_instance(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        weights_naive(inst.candidate, inst.labels, inst.split, inst.policy));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_WeightsNaive)->Range(1 << 10, 1 << 17)->Complexity()->Unit(benchmark::kMillisecond);

static void BM_WeightsFast(benchmark::State& state) {
  const auto inst = make_instance(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        weights_fast(inst.candidate, inst.labels, inst.split, inst.policy));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_WeightsFast)->Range(1 << 10, 1 << 17)->Complexity()->Unit(benchmark::kMillisecond);

static void BM_KnnPredict(benchmark::State& state) {
  RandomSource rng(55);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  LabeledDataset data;
  std::vector<double> row(3);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : row) v = rng.uniform();
    data.features.append_row(row);
    data.labels.push_back(static_cast<Label>(rng.uniform_int(64)));
  }
  for (int c = 0; c < 64; ++c) data.label_names.push_back(std::to_string(c));
  const auto model = KnnClassifier::fit(data, 5);
  const std::vector<double> q{0.5, 0.5, 0.5};
  for (auto _ : state) benchmark::DoNotOptimize(model.predict_proba(q));
}
BENCHMARK(BM_KnnPredict)->Range(1 << 10, 1 << 14);

static void BM_LofScore(benchmark::State& state) {
  RandomSource rng(56);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  FeatureMatrix ref(0, 0);
  std::vector<double> row(3);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : row) v = rng.uniform();
    ref.append_row(row);
  }
  const auto scorer = OneClassScorer::fit(ref, 20);
  const std::vector<double> q{0.5, 0.5, 0.5};
  for (auto _ : state) benchmark::DoNotOptimize(scorer.score(q));
}
BENCHMARK(BM_LofScore)->Range(1 << 9, 1 << 12);

BENCHMARK_MAIN();
