#include "osc/lof.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "osc/knn.hpp"

namespace osc {

OneClassScorer OneClassScorer::fit(const FeatureMatrix& reference, int k) {
  if (reference.rows() < 2) {
    throw std::invalid_argument("lof: insufficient reference data (need >= 2 points)");
  }
  if (k < 1) throw std::invalid_argument("lof: k must be >= 1");

  OneClassScorer scorer;
  scorer.reference_ = reference;
  const std::size_t n = reference.rows();
  scorer.k_ = std::min<int>(k, static_cast<int>(n) - 1);
  scorer.k_distance_.resize(n);
  scorer.lrd_.resize(n);

  std::vector<std::vector<std::size_t>> neigh(n);
  for (std::size_t i = 0; i < n; ++i) {
    neigh[i] = scorer.neighborhood(reference.row(i), i);
    scorer.k_distance_[i] = euclidean_distance(reference.row(i), reference.row(neigh[i].back()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double sum = scorer.reachability_sum(reference.row(i), neigh[i]);
    const double mean = std::max(sum / static_cast<double>(neigh[i].size()), kMinMeanReach);
    scorer.lrd_[i] = 1.0 / mean;
  }
  return scorer;
}

std::vector<std::size_t> OneClassScorer::neighborhood(std::span<const double> x,
                                                      std::size_t exclude_index) const {
  const std::size_t n = reference_.rows();
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == exclude_index) continue;
    dist.emplace_back(euclidean_distance(x, reference_.row(i)), i);
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), dist.size());
  std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
  const double kth = dist[k - 1].first;

  // All points within the k-th distance, ties included; sorted by distance
  // then index so the result is deterministic and .back() attains k-distance.
  std::vector<std::pair<double, std::size_t>> within;
  for (const auto& [d, i] : dist) {
    if (d <= kth) within.emplace_back(d, i);
  }
  std::sort(within.begin(), within.end());
  std::vector<std::size_t> out;
  out.reserve(within.size());
  for (const auto& [d, i] : within) out.push_back(i);
  return out;
}

double OneClassScorer::reachability_sum(std::span<const double> x,
                                        const std::vector<std::size_t>& neigh) const {
  double sum = 0.0;
  for (std::size_t o : neigh) {
    const double d = euclidean_distance(x, reference_.row(o));
    sum += std::max(k_distance_[o], d);
  }
  return sum;
}

double OneClassScorer::local_outlier_factor(std::span<const double> x) const {
  if (x.size() != dim()) throw std::invalid_argument("lof: query dimension mismatch");
  const auto neigh = neighborhood(x, reference_.rows());  // no exclusion for queries
  const double sum = reachability_sum(x, neigh);
  const double mean = std::max(sum / static_cast<double>(neigh.size()), kMinMeanReach);
  const double lrd_x = 1.0 / mean;

  double ratio_sum = 0.0;
  for (std::size_t o : neigh) ratio_sum += lrd_[o] / lrd_x;
  return ratio_sum / static_cast<double>(neigh.size());
}

double OneClassScorer::score(std::span<const double> x) const {
  return -local_outlier_factor(x);
}

}  // namespace osc
