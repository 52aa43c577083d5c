// Test-only reference implementations, independent of the library code paths
// they are used to check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "osc/dataset.hpp"

namespace oracle {

// Regularized upper incomplete gamma Q(a, x) via series / continued fraction
// (Numerical Recipes style); chi2_tail(x, k) = Q(k/2, x/2).
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) return 1.0;
  if (x == 0.0) return 1.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    // series for P(a,x)
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
  }
  // continued fraction for Q(a,x)
  double b = x + 1.0 - a, c = 1e308, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

inline double chi2_tail(double stat, double dof) { return gamma_q(dof / 2.0, stat / 2.0); }

// Plain textbook LOF, recomputed from scratch per query. Deliberately naive:
// no precomputation shared with the library implementation.
inline double naive_lof(std::span<const double> q, const std::vector<std::vector<double>>& ref,
                        int k) {
  const auto dist = [](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };
  const std::size_t n = ref.size();
  const auto kdist_and_neighbors = [&](std::span<const double> p, long self)
      -> std::pair<double, std::vector<std::size_t>> {
    std::vector<std::pair<double, std::size_t>> ds;
    for (std::size_t i = 0; i < n; ++i) {
      if (static_cast<long>(i) == self) continue;
      ds.emplace_back(dist(p, ref[i]), i);
    }
    std::sort(ds.begin(), ds.end());
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), ds.size());
    const double kd = ds[kk - 1].first;
    std::vector<std::size_t> neigh;
    for (const auto& [d, i] : ds) {
      if (d <= kd) neigh.push_back(i);
    }
    return {kd, neigh};
  };
  const auto lrd = [&](std::span<const double> p, long self) {
    const auto [kd, neigh] = kdist_and_neighbors(p, self);
    double sum = 0.0;
    for (std::size_t o : neigh) {
      const auto [kd_o, n_o] = kdist_and_neighbors(ref[o], static_cast<long>(o));
      sum += std::max(kd_o, dist(p, ref[o]));
    }
    const double mean = std::max(sum / static_cast<double>(neigh.size()), 1e-10);
    return 1.0 / mean;
  };
  const auto [kd, neigh] = kdist_and_neighbors(q, -1);
  const double lrd_q = lrd(q, -1);
  double ratio = 0.0;
  for (std::size_t o : neigh) ratio += lrd(ref[o], static_cast<long>(o)) / lrd_q;
  return ratio / static_cast<double>(neigh.size());
}

// All distinct multisets of a given size over an unbounded label alphabet,
// represented as partitions (multiplicity lists, descending).
inline void partitions_of(int n, int max_part, std::vector<int>& current,
                          std::vector<std::vector<int>>& out) {
  if (n == 0) {
    out.push_back(current);
    return;
  }
  for (int p = std::min(n, max_part); p >= 1; --p) {
    current.push_back(p);
    partitions_of(n - p, p, current, out);
    current.pop_back();
  }
}

inline std::vector<std::vector<int>> all_partitions(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> current;
  partitions_of(n, n, current, out);
  return out;
}

inline osc::LabeledDataset make_dataset(const std::vector<std::vector<double>>& rows,
                                        const std::vector<osc::Label>& labels) {
  osc::LabeledDataset d;
  osc::Label max_label = 0;
  for (osc::Label y : labels) max_label = std::max(max_label, y);
  for (osc::Label y = 0; y <= max_label; ++y) d.label_names.push_back(std::to_string(y));
  d.labels = labels;
  for (const auto& r : rows) d.features.append_row(r);
  return d;
}

}  // namespace oracle
