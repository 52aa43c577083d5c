#pragma once

#include <string>

#include "osc/dataset.hpp"

namespace osc {

// Dataset CSV format: header row `label,f0,f1,...,f{d-1}`; the label column is
// a string (interned to integer ids in first-appearance order), features are
// 64-bit floats. Parse errors carry the 1-based row number.
LabeledDataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const LabeledDataset& data);

// Deterministic shortest round-trip formatting for doubles.
std::string format_double(double value);

}  // namespace osc
