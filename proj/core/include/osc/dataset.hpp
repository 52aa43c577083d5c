#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace osc {

// Categorical label, interned to an integer surrogate at ingestion. Only
// equality is meaningful; no ordering semantics are used anywhere in the math.
using Label = std::int64_t;

// Dense row-major matrix of feature vectors; all rows share one dimension.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }

  void append_row(std::span<const double> values);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// The exchangeable sample: paired feature vectors and labels, plus the display
// names of the interned labels (indexed by label id).
struct LabeledDataset {
  FeatureMatrix features;
  std::vector<Label> labels;
  std::vector<std::string> label_names;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
  const std::string& name_of(Label y) const;

  // Subset by row indices; label ids and names are preserved.
  LabeledDataset subset(std::span<const std::size_t> indices) const;

  void validate() const;  // features/labels length agreement
};

// Sample frequency profile: M_k = number of distinct labels appearing exactly
// k times, stored sparsely, plus the per-label counts N(y). M_0 is reported as
// 0 by convention (the number of unseen distinct labels is unknowable).
class FrequencyProfile {
 public:
  FrequencyProfile() = default;
  explicit FrequencyProfile(std::span<const Label> labels);

  std::size_t sample_count() const { return n_; }
  // M_k; 0 for any k not present (including k = 0).
  std::size_t distinct_with_count(std::size_t k) const;
  // N(y); 0 if y is unseen.
  long long count(Label y) const;

  std::size_t distinct_count() const { return counts_.size(); }
  const std::unordered_map<Label, std::size_t>& counts() const { return counts_; }
  // K_n = {k >= 1 : M_k > 0}, ascending.
  std::vector<std::size_t> observed_frequencies() const;

 private:
  std::size_t n_ = 0;
  std::unordered_map<std::size_t, std::size_t> m_;  // k -> M_k, sparse
  std::unordered_map<Label, std::size_t> counts_;
};

FrequencyProfile frequency_profile(std::span<const Label> labels);
long long label_count(Label y, const FrequencyProfile& profile);
// unique(Y_1, ..., Y_n), sorted ascending for deterministic iteration.
std::vector<Label> observed_label_space(std::span<const Label> labels);

}  // namespace osc
