#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "osc/open_set.hpp"
#include "osc/simulation.hpp"
#include "test_oracles.hpp"

using namespace osc;

TEST_SUITE_BEGIN("open_set");

namespace {

OpenSetComponents fake_components(PredictionSet closed, double psi_unseen, double psi_seen) {
  OpenSetComponents c;
  c.closed_set = [closed](std::span<const double>, double, RandomSource&) { return closed; };
  c.unseen_pvalue = [psi_unseen](std::span<const double>, RandomSource&) { return psi_unseen; };
  c.seen_pvalue = [psi_seen](std::span<const double>, RandomSource&) { return psi_seen; };
  return c;
}

}  // namespace

TEST_CASE("allocation invariants") {
  AlphaAllocation ok{0.04, 0.03, 0.03};
  ok.validate(0.1);
  CHECK(AlphaAllocation::thirds(0.1).total() == doctest::Approx(0.1));
  CHECK_THROWS_AS((AlphaAllocation{0.05, 0.03, 0.03}.validate(0.1)), std::invalid_argument);
  CHECK_THROWS_AS((AlphaAllocation{-0.01, 0.06, 0.05}.validate(0.1)), std::invalid_argument);
}

TEST_CASE("joker rule covers exactly the three cases") {
  const PredictionSet closed{{1, 2}, false};
  const AlphaAllocation a{0.04, 0.03, 0.03};
  RandomSource rng(1);
  const std::vector<double> x{0.0};

  SUBCASE("unseen rejected, seen retained: closed set only") {
    const auto s = cgtc_predict(x, a, fake_components(closed, 0.02, 0.5), rng);
    CHECK(s.seen == closed.seen);
    CHECK_FALSE(s.joker);
  }
  SUBCASE("seen rejected, unseen retained: joker only") {
    const auto s = cgtc_predict(x, a, fake_components(closed, 0.5, 0.01), rng);
    CHECK(s.seen.empty());
    CHECK(s.joker);
  }
  SUBCASE("both retained: closed set plus joker") {
    const auto s = cgtc_predict(x, a, fake_components(closed, 0.5, 0.5), rng);
    CHECK(s.seen == closed.seen);
    CHECK(s.joker);
  }
  SUBCASE("both rejected: closed set plus joker (otherwise branch)") {
    const auto s = cgtc_predict(x, a, fake_components(closed, 0.01, 0.01), rng);
    CHECK(s.seen == closed.seen);
    CHECK(s.joker);
  }
  SUBCASE("alpha_seen = 0 cannot reject the seen hypothesis") {
    const AlphaAllocation a0{0.07, 0.03, 0.0};
    const auto s = cgtc_predict(x, a0, fake_components(closed, 0.01, 1e-9), rng);
    CHECK_FALSE(s.seen.empty());
  }
}

TEST_CASE("exactly one case fires for any p-value pair") {
  RandomSource rng(2);
  const PredictionSet closed{{4}, false};
  for (int t = 0; t < 300; ++t) {
    const AlphaAllocation a{0.04, rng.uniform(0.0, 0.05), rng.uniform(0.0, 0.05)};
    const double pu = rng.uniform(), ps = rng.uniform(0.0, 1.5);
    const bool case1 = pu <= a.alpha_unseen && ps > a.alpha_seen;
    const bool case2 = pu > a.alpha_unseen && ps <= a.alpha_seen;
    const bool case3 = !case1 && !case2;
    CHECK((int(case1) + int(case2) + int(case3)) == 1 + int(case3 && (case1 || case2)));
    const auto s = cgtc_predict(std::vector<double>{0.0}, a, fake_components(closed, pu, ps), rng);
    if (case1) CHECK((s.seen == closed.seen && !s.joker));
    if (case2) CHECK((s.seen.empty() && s.joker));
    if (case3) CHECK((s.seen == closed.seen && s.joker));
  }
}

TEST_CASE("cardinality counts the joker as one element") {
  CHECK(cardinality(PredictionSet{{1, 2}, false}) == 2);
  CHECK(cardinality(PredictionSet{{}, true}) == 1);
  CHECK(cardinality(PredictionSet{{1}, true}) == 2);
}

TEST_CASE("allocation loss") {
  const std::vector<Label> seen_space{1, 2, 3};

  SUBCASE("pure size term") {
    const PredictionSet s{{1, 2, 3, 4}, false};
    CHECK(allocation_loss(s, 1, 4, seen_space, 1.0) == doctest::Approx(1.0));
  }
  SUBCASE("pure joker penalty") {
    const PredictionSet s{{}, true};
    CHECK(allocation_loss(s, 2, 3, seen_space, 0.0) == doctest::Approx(1.0));
  }
  SUBCASE("worked example") {
    const PredictionSet s{{1, 2}, false};
    CHECK(allocation_loss(s, 9, 4, seen_space, 0.5) == doctest::Approx(0.25));
  }
  SUBCASE("joker is free when the truth is unseen") {
    const PredictionSet s{{}, true};
    CHECK(allocation_loss(s, 99, 3, seen_space, 0.0) == doctest::Approx(0.0));
  }
  SUBCASE("zero baseline is an error") {
    CHECK_THROWS_AS(allocation_loss(PredictionSet{}, 1, 0, seen_space, 0.5),
                    std::invalid_argument);
  }
}

namespace {

LabeledDataset balanced_k_class(RandomSource& rng, std::size_t n, int k, double sd = 0.05) {
  std::vector<std::vector<double>> rows;
  std::vector<Label> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const Label y = static_cast<Label>(rng.uniform_int(k));
    const double mean = static_cast<double>(y);
    rows.push_back({rng.normal(mean, sd), rng.normal(mean, sd), rng.normal(mean, sd)});
    labels.push_back(y);
  }
  return oracle::make_dataset(rows, labels);
}

}  // namespace

TEST_CASE("classifier p-values are consistent with the module-level operations") {
  RandomSource rng(31);
  DpConfig dp;
  dp.theta = 20.0;
  dp.n = 150;
  auto dp_rng = rng.fork("dp");
  const auto data = dp_sample(dp, dp_rng);

  ClassifierConfig cfg;
  auto build_rng = rng.fork("clf");
  const auto clf = OpenSetClassifier::build(data, cfg, PvalueVariant::xgt, build_rng);

  const auto scorer = fit_frequency_scorer(0, data, cfg.lof_k);
  for (int t = 0; t < 10; ++t) {
    const std::vector<double> x{rng.uniform(), rng.uniform(), rng.uniform()};
    auto a = rng.fork(t);
    CHECK(clf.unseen_pvalue(x, a) ==
          doctest::Approx(xgt_pvalue(0, data, x, scorer).value).epsilon(1e-12));
  }

  // gt variant returns the deterministic feature-blind value
  auto gt_build = rng.fork("clf2");
  const auto gt_clf = OpenSetClassifier::build(data, cfg, PvalueVariant::gt, gt_build);
  auto r = rng.fork(99);
  CHECK(gt_clf.unseen_pvalue(std::vector<double>{0, 0, 0}, r) ==
        doctest::Approx(gt_pvalue(0, frequency_profile(data.labels))));
}

TEST_CASE("tuner prefers the closed-set budget on closed-set data") {
  RandomSource rng(32);
  const auto data = balanced_k_class(rng, 300, 5);
  TuningConfig cfg;
  auto tune_rng = rng.fork("tune");
  const auto a = tune_allocation(data, 0.1, cfg, tune_rng);
  CHECK(a.alpha_class >= 0.8 * 0.1);
  CHECK(a.total() == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("tuner spends on the seen-label test under dominant novelty") {
  RandomSource rng(33);
  DpConfig dp;
  dp.theta = 5000.0;  // nearly every fold point is new
  dp.n = 250;
  auto dp_rng = rng.fork("dp");
  const auto data = dp_sample(dp, dp_rng);
  TuningConfig cfg;
  auto tune_rng = rng.fork("tune");
  const auto a = tune_allocation(data, 0.1, cfg, tune_rng);
  CHECK(a.alpha_seen > 0.0);
}

TEST_CASE("tuner is deterministic given the seed") {
  RandomSource rng(34);
  DpConfig dp;
  dp.theta = 50.0;
  dp.n = 220;
  auto dp_rng = rng.fork("dp");
  const auto data = dp_sample(dp, dp_rng);
  TuningConfig cfg;
  auto r1 = RandomSource(777).fork("tune");
  auto r2 = RandomSource(777).fork("tune");
  const auto a = tune_allocation(data, 0.1, cfg, r1);
  const auto b = tune_allocation(data, 0.1, cfg, r2);
  CHECK(a.alpha_class == b.alpha_class);
  CHECK(a.alpha_unseen == b.alpha_unseen);
  CHECK(a.alpha_seen == b.alpha_seen);
  a.validate(0.1);
}

TEST_CASE("finite label space with the recovery allocation reproduces the closed-set set") {
  RandomSource rng(35);
  const int K = 5;
  const double alpha = 0.1;
  const std::size_t n = 200;
  const double delta = (K + 1.0) / (n + 1.0);
  REQUIRE(delta < alpha);
  const AlphaAllocation a{alpha - delta, delta, 0.0};

  int checked = 0;
  for (int rep = 0; rep < 10; ++rep) {
    RandomSource rep_rng(900 + rep);
    const auto data = balanced_k_class(rep_rng, n, K);
    ClassifierConfig cfg;
    auto build_rng = rep_rng.fork("clf");
    const auto clf = OpenSetClassifier::build(data, cfg, PvalueVariant::xgt, build_rng);

    for (int t = 0; t < 20; ++t) {
      const Label y = static_cast<Label>(rep_rng.uniform_int(K));
      const std::vector<double> x{rep_rng.normal(y, 0.05), rep_rng.normal(y, 0.05),
                                  rep_rng.normal(y, 0.05)};
      auto rng_full = rep_rng.fork("pt").fork(t);
      auto rng_closed = rep_rng.fork("pt").fork(t).fork("closed");
      const auto open = clf.predict(x, a, rng_full);
      const auto closed = clf.closed_set(x, a.alpha_class, rng_closed);
      CHECK(open.seen == closed.seen);
      CHECK_FALSE(open.joker);
      ++checked;
    }
  }
  CHECK(checked == 200);
}

TEST_SUITE_END();
