#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "osc/dataset.hpp"
#include "osc/dataset_io.hpp"
#include "osc/random.hpp"
#include "test_oracles.hpp"

using namespace osc;

TEST_SUITE_BEGIN("dataset");

TEST_CASE("frequency profile counts distinct labels per frequency") {
  const std::vector<Label> labels{0, 0, 1, 2};  // a,a,b,c
  const auto p = frequency_profile(labels);
  CHECK(p.distinct_with_count(1) == 2);
  CHECK(p.distinct_with_count(2) == 1);
  CHECK(p.distinct_with_count(3) == 0);
  CHECK(p.count(0) == 2);
  CHECK(p.count(1) == 1);
  CHECK(p.count(2) == 1);
}

TEST_CASE("frequency profile of empty sequence") {
  const std::vector<Label> labels;
  const auto p = frequency_profile(labels);
  CHECK(p.sample_count() == 0);
  CHECK(p.distinct_count() == 0);
  CHECK(p.distinct_with_count(0) == 0);
  CHECK(p.distinct_with_count(1) == 0);
}

TEST_CASE("frequency profile of constant sequence") {
  const std::vector<Label> labels{5, 5, 5};
  const auto p = frequency_profile(labels);
  CHECK(p.distinct_with_count(3) == 1);
  CHECK(p.distinct_with_count(1) == 0);
  CHECK(p.distinct_with_count(2) == 0);
}

TEST_CASE("label_count returns 0 for unseen labels") {
  const std::vector<Label> labels{0, 0, 1};
  const auto p = frequency_profile(labels);
  CHECK(label_count(0, p) == 2);
  CHECK(label_count(1, p) == 1);
  CHECK(label_count(99, p) == 0);
}

TEST_CASE("observed_label_space deduplicates") {
  CHECK(observed_label_space(std::vector<Label>{0, 0, 1}) == std::vector<Label>{0, 1});
  CHECK(observed_label_space(std::vector<Label>{}) == std::vector<Label>{});
  CHECK(observed_label_space(std::vector<Label>{2, 2, 2}) == std::vector<Label>{2});
}

TEST_CASE("profile identities on random label sequences") {
  RandomSource rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(40);
    std::vector<Label> labels(n);
    for (auto& y : labels) y = static_cast<Label>(rng.uniform_int(8));
    const auto p = frequency_profile(labels);

    std::size_t mass = 0, distinct = 0;
    for (std::size_t k = 1; k <= n; ++k) {
      mass += k * p.distinct_with_count(k);
      distinct += p.distinct_with_count(k);
    }
    CHECK(mass == n);
    CHECK(distinct == observed_label_space(labels).size());

    // permutation invariance
    auto shuffled = labels;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      std::swap(shuffled[i], shuffled[i + rng.uniform_int(n - i)]);
    }
    const auto q = frequency_profile(shuffled);
    for (std::size_t k = 0; k <= n; ++k) {
      CHECK(p.distinct_with_count(k) == q.distinct_with_count(k));
    }
  }
}

TEST_CASE("random source reproducibility and stream separation") {
  RandomSource a(123, 4), b(123, 4), c(123, 5);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const double ua = a.uniform(), ub = b.uniform(), uc = c.uniform();
    all_equal = all_equal && ua == ub;
    any_diff = any_diff || ua != uc;
  }
  CHECK(all_equal);
  CHECK(any_diff);

  RandomSource parent(9);
  auto f1 = parent.fork("split");
  auto f2 = parent.fork("split");
  CHECK(f1.uniform() == f2.uniform());
  CHECK(parent.fork("split").stream() != parent.fork("rgt").stream());
}

TEST_CASE("uniform_int stays in range and covers the support") {
  RandomSource rng(11);
  std::vector<int> seen(6, 0);
  for (int i = 0; i < 3000; ++i) ++seen[rng.uniform_int(6)];
  for (int count : seen) CHECK(count > 0);
}

TEST_CASE("dataset csv round trip") {
  LabeledDataset d;
  d.label_names = {"apple", "pear"};
  d.labels = {0, 1, 0};
  d.features.append_row(std::vector<double>{1.5, -2.25});
  d.features.append_row(std::vector<double>{0.1, 0.30000000000000004});
  d.features.append_row(std::vector<double>{-1e-9, 3.14159});

  const auto path = std::filesystem::temp_directory_path() / "osc_roundtrip.csv";
  write_dataset_csv(path.string(), d);
  const auto back = read_dataset_csv(path.string());
  REQUIRE(back.size() == 3);
  CHECK(back.dim() == 2);
  CHECK(back.labels == d.labels);
  CHECK(back.label_names == d.label_names);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(back.features.row(i)[j] == d.features.row(i)[j]);
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("dataset csv rejects malformed rows with a row number") {
  const auto path = std::filesystem::temp_directory_path() / "osc_bad.csv";
  {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    std::fputs("label,f0,f1\nx,1.0,2.0\ny,oops,3.0\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_WITH_AS(read_dataset_csv(path.string()),
                       doctest::Contains("row 3"), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_SUITE_END();
