#pragma once

#include <span>
#include <vector>

#include "osc/dataset.hpp"

namespace osc {

enum class Metric { euclidean, cosine };

// Probabilistic k-nearest-neighbor classifier. Neighbor votes are weighted by
// inverse distance, floored at kEpsilonDistance so exact matches dominate
// without dividing by zero.
class KnnClassifier {
 public:
  static constexpr double kEpsilonDistance = 1e-12;

  static KnnClassifier fit(const LabeledDataset& train, int k = 5,
                           Metric metric = Metric::euclidean);

  // Probability vector over class_index(); entries are nonnegative and sum to 1.
  std::vector<double> predict_proba(std::span<const double> x) const;

  const std::vector<Label>& class_index() const { return class_index_; }
  int effective_k() const { return k_; }
  std::size_t dim() const { return features_.cols(); }
  Metric metric() const { return metric_; }

 private:
  int k_ = 0;
  Metric metric_ = Metric::euclidean;
  FeatureMatrix features_;
  std::vector<std::size_t> class_of_point_;  // row -> position in class_index_
  std::vector<Label> class_index_;           // sorted distinct training labels
};

double euclidean_distance(std::span<const double> a, std::span<const double> b);
double cosine_distance(std::span<const double> a, std::span<const double> b);

}  // namespace osc
