#pragma once

#include <span>
#include <vector>

#include "osc/dataset.hpp"

namespace osc {

// One-class conformity scorer built on the local outlier factor. Fitting
// precomputes each reference point's k-distance and local reachability
// density; scoring a query never mutates the fitted state.
//
// score() returns -LOF(x), so LARGER values mean the query conforms better to
// the reference distribution. Inliers score near -1, outliers well below.
class OneClassScorer {
 public:
  static OneClassScorer fit(const FeatureMatrix& reference, int k = 20);

  // Conformity score -LOF(x).
  double score(std::span<const double> x) const;
  // Raw local outlier factor of a query point (>= 0, ~1 for inliers).
  double local_outlier_factor(std::span<const double> x) const;

  int effective_k() const { return k_; }
  std::size_t dim() const { return reference_.cols(); }

 private:
  // k-distance neighborhood of a query against the reference set: all points
  // at distance <= the k-th smallest (ties included), self excluded by index.
  std::vector<std::size_t> neighborhood(std::span<const double> x,
                                        std::size_t exclude_index) const;
  double reachability_sum(std::span<const double> x,
                          const std::vector<std::size_t>& neigh) const;

  static constexpr double kMinMeanReach = 1e-10;  // keeps lrd finite on duplicates

  int k_ = 0;
  FeatureMatrix reference_;
  std::vector<double> k_distance_;  // per reference point
  std::vector<double> lrd_;         // local reachability density per reference point
};

}  // namespace osc
