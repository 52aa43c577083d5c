#include "osc/dataset.hpp"

#include <algorithm>
#include <stdexcept>

namespace osc {

void FeatureMatrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) {
    cols_ = values.size();
  } else if (values.size() != cols_) {
    throw std::invalid_argument("FeatureMatrix: row dimension mismatch");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

const std::string& LabeledDataset::name_of(Label y) const {
  static const std::string unknown = "?";
  if (y < 0 || static_cast<std::size_t>(y) >= label_names.size()) return unknown;
  return label_names[static_cast<std::size_t>(y)];
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.label_names = label_names;
  out.features = FeatureMatrix(0, 0);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw std::out_of_range("LabeledDataset::subset: index out of range");
    out.features.append_row(features.row(i));
    out.labels.push_back(labels[i]);
  }
  return out;
}

void LabeledDataset::validate() const {
  if (features.rows() != labels.size()) {
    throw std::invalid_argument("LabeledDataset: features and labels must have equal length");
  }
}

FrequencyProfile::FrequencyProfile(std::span<const Label> labels) : n_(labels.size()) {
  counts_.reserve(labels.size());
  for (Label y : labels) ++counts_[y];
  for (const auto& [y, c] : counts_) ++m_[c];
}

std::size_t FrequencyProfile::distinct_with_count(std::size_t k) const {
  if (k == 0) return 0;
  auto it = m_.find(k);
  return it == m_.end() ? 0 : it->second;
}

long long FrequencyProfile::count(Label y) const {
  auto it = counts_.find(y);
  return it == counts_.end() ? 0 : static_cast<long long>(it->second);
}

std::vector<std::size_t> FrequencyProfile::observed_frequencies() const {
  std::vector<std::size_t> ks;
  ks.reserve(m_.size());
  for (const auto& [k, mk] : m_) {
    if (mk > 0) ks.push_back(k);
  }
  std::sort(ks.begin(), ks.end());
  return ks;
}

FrequencyProfile frequency_profile(std::span<const Label> labels) {
  return FrequencyProfile(labels);
}

long long label_count(Label y, const FrequencyProfile& profile) {
  return profile.count(y);
}

std::vector<Label> observed_label_space(std::span<const Label> labels) {
  std::vector<Label> out(labels.begin(), labels.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace osc
