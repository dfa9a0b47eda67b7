#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "fine/dataset.hpp"

namespace fine {

enum class NoiseKind { symmetric, asymmetric_pairs, asymmetric_circular };

using ClassMapping = std::vector<std::pair<Label, Label>>;

struct NoiseSpec {
  NoiseKind kind = NoiseKind::symmetric;
  double rate = 0.0;
  std::size_t num_classes = 2;
  ClassMapping mapping;
  std::optional<std::size_t> superclass_size;
  // Symmetric only: draw the replacement from all K classes instead of the K-1 others.
  bool include_true_class = false;
  std::uint64_t seed = 0;
};

struct CorruptionResult {
  std::vector<Label> observed_labels;
  std::vector<Label> true_labels;
  std::vector<bool> corrupted_mask;

  std::size_t corrupted_count() const;
};

/// Corrupts exactly floor(rate * N) labels chosen uniformly without replacement.
CorruptionResult inject_symmetric(std::span<const Label> labels, const NoiseSpec& spec);

/// For every mapped source class c, relabels exactly floor(rate * N_c) of its
/// samples to mapping[c]. Each class draws from its own stream.
CorruptionResult inject_asymmetric_pairs(std::span<const Label> labels, const NoiseSpec& spec);

/// Class c moves to its successor within a contiguous superclass block,
/// wrapping at the block boundary.
CorruptionResult inject_asymmetric_circular(std::span<const Label> labels, const NoiseSpec& spec);

/// Dispatches on spec.kind.
CorruptionResult inject(std::span<const Label> labels, const NoiseSpec& spec);

Label circular_target(Label c, std::size_t superclass_size);

/// Parses "from>to" pairs separated by commas, e.g. "9>1,2>0,3>5,5>3".
ClassMapping parse_mapping(std::string_view text);

/// TRUCK->AUTOMOBILE, BIRD->AIRPLANE, DEER->HORSE, CAT<->DOG with CIFAR-10 ids.
ClassMapping cifar10_asymmetric_mapping();

NoiseKind parse_noise_kind(std::string_view text);

}  // namespace fine
