#include "fine/dataset.hpp"

#include <cmath>
#include <string>

#include "fine/error.hpp"

namespace fine {

std::vector<std::size_t> Dataset::members(Label k) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < observed_labels.size(); ++i) {
    if (observed_labels[i] == k) out.push_back(i);
  }
  return out;
}

std::vector<bool> Dataset::clean_mask() const {
  if (!true_labels) throw Error(ErrorCode::InvalidArgument, "dataset carries no true labels");
  std::vector<bool> mask(size());
  for (std::size_t i = 0; i < size(); ++i) mask[i] = (*true_labels)[i] == observed_labels[i];
  return mask;
}

void Dataset::validate() const {
  if (dim == 0 && !empty()) throw Error(ErrorCode::DimensionMismatch, "dataset dimension is 0");
  if (features.size() != size() * dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "feature buffer holds " + std::to_string(features.size()) + " values, expected " +
                    std::to_string(size() * dim));
  }
  if (true_labels && true_labels->size() != size()) {
    throw Error(ErrorCode::LengthMismatch, "true label count differs from observed label count");
  }
  auto check = [&](const std::vector<Label>& labels) {
    for (Label l : labels) {
      if (l >= num_classes) {
        throw Error(ErrorCode::CorruptLabels, "label " + std::to_string(l) + " >= num_classes " +
                                                  std::to_string(num_classes));
      }
    }
  };
  check(observed_labels);
  if (true_labels) check(*true_labels);
  for (double f : features) {
    if (!std::isfinite(f)) throw Error(ErrorCode::InvalidArgument, "non-finite feature value");
  }
}

Dataset reorder(const Dataset& dataset, std::span<const std::size_t> order) {
  Dataset out;
  out.dim = dataset.dim;
  out.num_classes = dataset.num_classes;
  out.features.reserve(order.size() * dataset.dim);
  out.observed_labels.reserve(order.size());
  if (dataset.true_labels) out.true_labels.emplace();
  for (std::size_t i : order) {
    const auto r = dataset.row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.observed_labels.push_back(dataset.observed_labels[i]);
    if (dataset.true_labels) out.true_labels->push_back((*dataset.true_labels)[i]);
  }
  return out;
}

}  // namespace fine
