#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "osc/good_turing.hpp"
#include "osc/random.hpp"
#include "test_oracles.hpp"

using namespace osc;

TEST_SUITE_BEGIN("good_turing");

TEST_CASE("gt p-value closed form") {
  // all labels distinct: psi_0 = (n+1)/(n+1) = 1
  const std::vector<Label> distinct{0, 1, 2, 3, 4};
  CHECK(gt_pvalue(0, frequency_profile(distinct)) == doctest::Approx(1.0));

  const std::vector<Label> aabc{0, 0, 1, 2};
  const auto p = frequency_profile(aabc);
  CHECK(gt_pvalue(0, p) == doctest::Approx(3.0 / 5.0));
  CHECK(gt_pvalue(1, p) == doctest::Approx(4.0 / 5.0));
  CHECK_THROWS_AS(gt_pvalue(5, p), std::invalid_argument);
}

TEST_CASE("rgt support and distribution") {
  const std::vector<Label> aabc{0, 0, 1, 2};
  const auto profile = frequency_profile(aabc);
  RandomSource rng(77);

  SUBCASE("degenerate support is deterministic") {
    // M_1 = 0: k=0 support is {1/(n+1)}
    const std::vector<Label> pairs{0, 0, 1, 1};
    const auto p = frequency_profile(pairs);
    for (int t = 0; t < 20; ++t) {
      CHECK(rgt_pvalue(0, p, rng) == doctest::Approx(1.0 / 5.0));
    }
  }

  SUBCASE("k=0 support {1,2,3}/5 is uniform") {
    std::map<int, int> counts;
    const int draws = 30000;
    for (int t = 0; t < draws; ++t) {
      const double v = rgt_pvalue(0, profile, rng);
      ++counts[static_cast<int>(std::lround(v * 5.0))];
    }
    REQUIRE(counts.size() == 3);
    double chi2 = 0.0;
    const double expected = draws / 3.0;
    for (int v = 1; v <= 3; ++v) {
      const double d = counts[v] - expected;
      chi2 += d * d / expected;
    }
    CHECK(oracle::chi2_tail(chi2, 2.0) > 0.01);
  }

  SUBCASE("never exceeds the deterministic p-value") {
    for (int t = 0; t < 500; ++t) {
      CHECK(rgt_pvalue(0, profile, rng) <= gt_pvalue(0, profile));
      CHECK(rgt_pvalue(1, profile, rng) <= gt_pvalue(1, profile));
    }
  }
}

namespace {

// Dataset where the label of each point determines its cluster; counts shaped
// by the given multiplicities.
LabeledDataset clustered_by_multiplicity(const std::vector<int>& multiplicities,
                                         RandomSource& rng) {
  std::vector<std::vector<double>> rows;
  std::vector<Label> labels;
  for (std::size_t c = 0; c < multiplicities.size(); ++c) {
    const double mean = static_cast<double>(c) * 3.0;
    for (int i = 0; i < multiplicities[c]; ++i) {
      rows.push_back({rng.normal(mean, 0.05), rng.normal(mean, 0.05)});
      labels.push_back(static_cast<Label>(c));
    }
  }
  return oracle::make_dataset(rows, labels);
}

}  // namespace

TEST_CASE("frequency scorer training-set selection") {
  RandomSource rng(5);

  SUBCASE("empty exclusion trains on everything") {
    const auto data = clustered_by_multiplicity({3, 3, 4}, rng);
    const auto scorer = fit_frequency_scorer(0, data, 2);
    CHECK_FALSE(scorer.feature_blind_fallback);
    CHECK(scorer.training_size == data.size());
  }

  SUBCASE("k=1 on singleton+pair data excludes everything") {
    const auto data = clustered_by_multiplicity({1, 1, 2, 2}, rng);
    const auto scorer = fit_frequency_scorer(1, data, 2);
    CHECK(scorer.feature_blind_fallback);
  }

  SUBCASE("k=0 on singleton+pair data keeps the pairs") {
    const auto data = clustered_by_multiplicity({1, 1, 2, 2}, rng);
    const auto scorer = fit_frequency_scorer(0, data, 2);
    CHECK_FALSE(scorer.feature_blind_fallback);
    CHECK(scorer.training_size == 4);
  }

  SUBCASE("permuting rows leaves the training set unchanged") {
    auto data = clustered_by_multiplicity({1, 2, 3, 4}, rng);
    const auto a = fit_frequency_scorer(0, data, 2);

    std::vector<std::size_t> perm(data.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = perm.size() - 1 - i;
    const auto permuted = data.subset(perm);
    const auto b = fit_frequency_scorer(0, permuted, 2);
    CHECK(a.training_size == b.training_size);
    // identical scores on a fixed query: the fitted scorer is order-insensitive
    const std::vector<double> q{1.0, 1.0};
    CHECK(a.scorer->score(q) == doctest::Approx(b.scorer->score(q)));
  }
}

TEST_CASE("xgt extremes and arithmetic") {
  RandomSource rng(6);
  // 4 singletons in one far cluster, heavy labels elsewhere; n = 9
  const auto data = clustered_by_multiplicity({1, 1, 1, 1, 5}, rng);
  REQUIRE(data.size() == 9);
  const auto scorer = fit_frequency_scorer(0, data, 2);
  REQUIRE_FALSE(scorer.feature_blind_fallback);
  const auto profile = frequency_profile(data.labels);

  // a query inside the heavy cluster conforms better than every singleton:
  // all indicators zero -> smallest value 1/(n+1)
  const auto in_heavy = xgt_pvalue(0, data, std::vector<double>{12.0, 12.0}, scorer);
  CHECK(in_heavy.value == doctest::Approx(1.0 / 10.0));
  CHECK_FALSE(in_heavy.vacuous);

  // a query far from everything is the least conforming: every indicator
  // fires -> the feature-blind value (M_1+1)/(n+1)
  const auto far = xgt_pvalue(0, data, std::vector<double>{-100.0, 80.0}, scorer);
  CHECK(far.value == doctest::Approx(gt_pvalue(0, profile)));
  CHECK(far.value == doctest::Approx(5.0 / 10.0));

  // singleton conformity grows toward the heavy cluster at mean 12, so a
  // query between the singletons at means 3 and 6 outranks exactly two of the
  // four: psi = (1 + 2)/(n + 1)
  const auto midway = xgt_pvalue(0, data, std::vector<double>{4.5, 4.5}, scorer);
  CHECK(midway.value == doctest::Approx(3.0 / 10.0));
}

TEST_CASE("xgt flags vacuous hypotheses") {
  RandomSource rng(7);
  const auto data = clustered_by_multiplicity({3, 3, 3}, rng);  // no label has count 2
  const auto scorer = fit_frequency_scorer(2, data, 2);
  const auto r = xgt_pvalue(2, data, std::vector<double>{0.0, 0.0}, scorer);
  CHECK(r.vacuous);
}

TEST_CASE("dominance: xgt <= gt and rgt <= gt on random instances") {
  RandomSource rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<int> mult;
    const int clusters = 2 + static_cast<int>(rng.uniform_int(6));
    for (int c = 0; c < clusters; ++c) mult.push_back(1 + static_cast<int>(rng.uniform_int(4)));
    const auto data = clustered_by_multiplicity(mult, rng);
    const auto profile = frequency_profile(data.labels);

    for (std::size_t k = 0; k <= 2; ++k) {
      const double gt = gt_pvalue(k, profile);
      for (int d = 0; d < 5; ++d) CHECK(rgt_pvalue(k, profile, rng) <= gt);
      const auto scorer = fit_frequency_scorer(k, data, 2);
      const std::vector<double> q{rng.uniform(-5.0, 20.0), rng.uniform(-5.0, 20.0)};
      CHECK(xgt_pvalue(k, data, q, scorer).value <= gt + 1e-12);
    }
  }
}

TEST_CASE("power-law weights") {
  CHECK(power_law_weights(1, 1.6).at(1) == doctest::Approx(1.0));

  const auto w3 = power_law_weights(3, 1.6);
  // 1 / (1 + 2^-1.6 + 3^-1.6)
  CHECK(w3.at(1) == doctest::Approx(0.6656441).epsilon(1e-6));
  CHECK(w3.at(1) > w3.at(2));
  CHECK(w3.at(2) > w3.at(3));

  const auto w50 = power_law_weights(50, 1.6);
  double total = 0.0;
  for (double c : w50.c) total += c;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("seen p-value combination") {
  const auto w = power_law_weights(2, 1.6);

  SUBCASE("single term") {
    std::map<std::size_t, double> p{{1, w.at(1) * 0.3}};
    CHECK(seen_pvalue(p, w) == doctest::Approx(0.3));
  }
  SUBCASE("equal ratios give one") {
    std::map<std::size_t, double> p{{1, w.at(1)}, {2, w.at(2)}};
    CHECK(seen_pvalue(p, w) == doctest::Approx(1.0));
  }
  SUBCASE("worked example may exceed one") {
    std::map<std::size_t, double> p{{1, 0.02}, {2, 0.30}};
    CHECK(seen_pvalue(p, w) == doctest::Approx(1.2094).epsilon(1e-3));
  }
  SUBCASE("empty set of hypotheses is an error") {
    std::map<std::size_t, double> p;
    CHECK_THROWS_AS(seen_pvalue(p, w), std::invalid_argument);
  }
}

TEST_SUITE_END();
