#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace fine {

using Label = std::uint32_t;

/// Feature vectors (row-major, n x dim) with observed and optional true labels.
struct Dataset {
  std::size_t dim = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;
  std::vector<Label> observed_labels;
  std::optional<std::vector<Label>> true_labels;

  std::size_t size() const noexcept { return observed_labels.size(); }
  bool empty() const noexcept { return observed_labels.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }
  std::span<double> row(std::size_t i) { return {features.data() + i * dim, dim}; }

  /// Indices of samples whose observed label is k, ascending.
  std::vector<std::size_t> members(Label k) const;

  /// true_labels[i] == observed_labels[i]; requires true labels.
  std::vector<bool> clean_mask() const;

  /// Throws on inconsistent sizes, labels >= num_classes or non-finite features.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

/// Keeps rows `order[0], order[1], ...` in that order.
Dataset reorder(const Dataset& dataset, std::span<const std::size_t> order);

}  // namespace fine
