#pragma once

#include <cstdint>
#include <vector>

#include "fine/dataset.hpp"
#include "fine/linalg.hpp"

namespace fine {

/// Binary model: clean features v + eps, noisy features w + eps, with
/// angle(v, w) = theta and eps ~ N(0, sigma^2 I).
struct SyntheticSpec {
  std::size_t d = 2;
  std::size_t n_clean = 1;
  std::size_t n_noisy = 0;
  double theta = 0.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  double tau() const { return static_cast<double>(n_noisy) / static_cast<double>(n_clean); }
};

struct SyntheticDataset {
  SyntheticSpec spec;
  std::vector<double> features;  // row-major; clean rows first, then noisy
  std::vector<bool> true_mask;    // true = clean
  Vector v;
  Vector w;

  std::size_t size() const { return true_mask.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * spec.d, spec.d}; }

  /// Single observed class 0; true label 0 for clean rows, 1 for noisy rows.
  Dataset to_dataset() const;
};

SyntheticDataset generate_lda(const SyntheticSpec& spec);

struct MulticlassDataset {
  Dataset dataset;                  // observed == true labels, class blocks in order
  std::vector<Vector> directions;   // v_k
  std::vector<double> pairwise_cos; // <v_i, v_j> for i < j, row-major over pairs
};

/// K seeded random unit directions, per_class_n samples each.
MulticlassDataset generate_multiclass(std::size_t d, std::size_t k, std::size_t per_class_n, double sigma,
                                      std::uint64_t seed);

/// Same as generate_multiclass with caller-supplied unit directions.
MulticlassDataset generate_multiclass(std::vector<Vector> directions, std::size_t per_class_n, double sigma,
                                      std::uint64_t seed);

/// K orthonormal directions in R^d (K <= d), by Gram-Schmidt on seeded draws.
std::vector<Vector> orthonormal_directions(std::size_t d, std::size_t k, std::uint64_t seed);

}  // namespace fine
