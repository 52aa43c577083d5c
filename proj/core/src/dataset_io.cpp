#include "osc/dataset_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace osc {

std::string format_double(double value) {
  char buf[40];
  if (value == static_cast<double>(static_cast<long long>(value)) &&
      std::fabs(value) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(value));
    return buf;
  }
  // Shortest representation that round-trips.
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  double parsed = std::strtod(buf, nullptr);
  if (parsed == value) {
    for (int prec = 1; prec < 17; ++prec) {
      char candidate[40];
      std::snprintf(candidate, sizeof(candidate), "%.*g", prec, value);
      if (std::strtod(candidate, nullptr) == value) return candidate;
    }
  }
  return buf;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

[[noreturn]] void fail_row(std::size_t row, const std::string& what) {
  throw std::runtime_error("dataset csv row " + std::to_string(row) + ": " + what);
}

}  // namespace

LabeledDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);

  LabeledDataset data;
  std::unordered_map<std::string, Label> intern;
  std::string line;
  std::size_t row = 0;
  std::size_t expected_fields = 0;

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++row;
    if (row == 1) {
      auto header = split_fields(line);
      if (header.size() < 2 || header[0] != "label") {
        fail_row(row, "expected header 'label,f0,...'");
      }
      expected_fields = header.size();
      continue;
    }
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != expected_fields) {
      fail_row(row, "expected " + std::to_string(expected_fields) + " fields, got " +
                        std::to_string(fields.size()));
    }
    auto [it, inserted] = intern.try_emplace(fields[0], static_cast<Label>(intern.size()));
    if (inserted) data.label_names.push_back(fields[0]);
    data.labels.push_back(it->second);

    std::vector<double> coords(fields.size() - 1);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      const char* begin = fields[j].c_str();
      char* end = nullptr;
      coords[j - 1] = std::strtod(begin, &end);
      if (end == begin || *end != '\0') {
        fail_row(row, "malformed feature value '" + fields[j] + "'");
      }
    }
    data.features.append_row(coords);
  }
  data.validate();
  return data;
}

void write_dataset_csv(const std::string& path, const LabeledDataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  out << "label";
  for (std::size_t j = 0; j < data.dim(); ++j) out << ",f" << j;
  out << "\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.name_of(data.labels[i]);
    for (double v : data.features.row(i)) out << "," << format_double(v);
    out << "\n";
  }
  if (!out) throw std::runtime_error("i/o failure while writing " + path);
}

}  // namespace osc
