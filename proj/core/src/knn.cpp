#include "osc/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace osc {

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

KnnClassifier KnnClassifier::fit(const LabeledDataset& train, int k, Metric metric) {
  if (train.size() == 0) throw std::invalid_argument("knn: empty training data");
  if (k < 1) throw std::invalid_argument("knn: k must be >= 1");
  train.validate();

  KnnClassifier model;
  model.metric_ = metric;
  model.k_ = std::min<int>(k, static_cast<int>(train.size()));
  model.features_ = train.features;
  model.class_index_ = observed_label_space(train.labels);
  model.class_of_point_.resize(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto it = std::lower_bound(model.class_index_.begin(), model.class_index_.end(),
                               train.labels[i]);
    model.class_of_point_[i] = static_cast<std::size_t>(it - model.class_index_.begin());
  }
  return model;
}

std::vector<double> KnnClassifier::predict_proba(std::span<const double> x) const {
  if (x.size() != dim()) throw std::invalid_argument("knn: query dimension mismatch");

  const std::size_t n = features_.rows();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = metric_ == Metric::euclidean ? euclidean_distance(x, features_.row(i))
                                                  : cosine_distance(x, features_.row(i));
    dist[i] = {d, i};
  }
  const std::size_t k = static_cast<std::size_t>(k_);
  // Ties in distance resolved by point index for determinism.
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

  std::vector<double> weights(class_index_.size(), 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const auto& [d, i] = dist[j];
    weights[class_of_point_[i]] += 1.0 / std::max(d, kEpsilonDistance);
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= total;
  return weights;
}

}  // namespace osc
