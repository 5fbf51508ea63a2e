#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "smallcar/sysid/errors.hpp"

namespace smallcar::sysid {

struct ColumnInfo {
  std::string name;
  std::string unit;
};

/// Training inputs X (N x M) and labels Y (N x n), stored row-major.
class Dataset {
public:
  Dataset() = default;
  Dataset(std::vector<ColumnInfo> inputs, std::vector<ColumnInfo> labels)
      : inputs_(std::move(inputs)), labels_(std::move(labels)) {
    if (inputs_.empty() || labels_.empty()) throw ConfigError("Dataset: needs input and label columns");
  }

  void add_row(std::span<const double> x, std::span<const double> y) {
    if (x.size() != inputs_.size() || y.size() != labels_.size()) {
      throw ConfigError("Dataset::add_row: row width does not match column descriptors");
    }
    for (double v : x) {
      if (!std::isfinite(v)) throw ConfigError("Dataset::add_row: non-finite input");
    }
    for (double v : y) {
      if (!std::isfinite(v)) throw ConfigError("Dataset::add_row: non-finite label");
    }
    x_.insert(x_.end(), x.begin(), x.end());
    y_.insert(y_.end(), y.begin(), y.end());
  }
  void add_row(std::initializer_list<double> x, std::initializer_list<double> y) {
    add_row(std::span<const double>(x.begin(), x.size()), std::span<const double>(y.begin(), y.size()));
  }

  [[nodiscard]] std::size_t rows() const { return inputs_.empty() ? 0 : x_.size() / inputs_.size(); }
  [[nodiscard]] bool empty() const { return rows() == 0; }
  [[nodiscard]] std::size_t input_width() const { return inputs_.size(); }
  [[nodiscard]] std::size_t label_width() const { return labels_.size(); }
  [[nodiscard]] const std::vector<ColumnInfo>& input_columns() const { return inputs_; }
  [[nodiscard]] const std::vector<ColumnInfo>& label_columns() const { return labels_; }

  [[nodiscard]] std::span<const double> x(std::size_t row) const {
    return {x_.data() + row * inputs_.size(), inputs_.size()};
  }
  [[nodiscard]] std::span<const double> y(std::size_t row) const {
    return {y_.data() + row * labels_.size(), labels_.size()};
  }

  /// Appends the rows of `other`, which must share this dataset's columns.
  void append(const Dataset& other) {
    if (other.input_width() != input_width() || other.label_width() != label_width()) {
      throw ConfigError("Dataset::append: column mismatch");
    }
    x_.insert(x_.end(), other.x_.begin(), other.x_.end());
    y_.insert(y_.end(), other.y_.begin(), other.y_.end());
  }

private:
  std::vector<ColumnInfo> inputs_;
  std::vector<ColumnInfo> labels_;
  std::vector<double> x_;
  std::vector<double> y_;
};

}  // namespace smallcar::sysid
