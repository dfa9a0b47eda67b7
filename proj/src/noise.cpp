#include "fine/noise.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <string>

#include "fine/error.hpp"
#include "fine/random.hpp"

namespace fine {
namespace {

void check_common(std::span<const Label> labels, const NoiseSpec& spec) {
  if (!(spec.rate >= 0.0 && spec.rate <= 1.0)) {
    throw Error(ErrorCode::InvalidRate, "noise rate must lie in [0, 1], got " + std::to_string(spec.rate));
  }
  if (spec.num_classes < 2) throw Error(ErrorCode::InvalidSpec, "noise needs at least two classes");
  for (Label l : labels) {
    if (l >= spec.num_classes) {
      throw Error(ErrorCode::CorruptLabels, "label " + std::to_string(l) + " outside [0, " +
                                                std::to_string(spec.num_classes) + ")");
    }
  }
}

CorruptionResult identity(std::span<const Label> labels) {
  CorruptionResult r;
  r.observed_labels.assign(labels.begin(), labels.end());
  r.true_labels.assign(labels.begin(), labels.end());
  r.corrupted_mask.assign(labels.size(), false);
  return r;
}

// Relabels floor(rate * N_c) samples of every class c with a target in
// `targets`, drawing each class from stream c of spec.seed.
CorruptionResult flip_per_class(std::span<const Label> labels, const NoiseSpec& spec,
                                const std::map<Label, Label>& targets) {
  CorruptionResult r = identity(labels);
  for (const auto& [source, target] : targets) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == source) members.push_back(i);
    }
    Rng rng(spec.seed, source);
    const auto chosen = rng.sample_without_replacement(members.size(), exact_count(spec.rate, members.size()));
    for (std::size_t c : chosen) {
      const std::size_t i = members[c];
      r.observed_labels[i] = target;
      r.corrupted_mask[i] = true;
    }
  }
  return r;
}

}  // namespace

std::size_t CorruptionResult::corrupted_count() const {
  return static_cast<std::size_t>(std::count(corrupted_mask.begin(), corrupted_mask.end(), true));
}

CorruptionResult inject_symmetric(std::span<const Label> labels, const NoiseSpec& spec) {
  check_common(labels, spec);
  CorruptionResult r = identity(labels);
  Rng rng(spec.seed);
  const auto chosen = rng.sample_without_replacement(labels.size(), exact_count(spec.rate, labels.size()));
  const auto k = static_cast<std::uint64_t>(spec.num_classes);
  for (std::size_t i : chosen) {
    const Label truth = labels[i];
    Label replacement = 0;
    if (spec.include_true_class) {
      replacement = static_cast<Label>(rng.below(k));
    } else {
      // Uniform over the K-1 other classes.
      const auto draw = static_cast<Label>(rng.below(k - 1));
      replacement = draw < truth ? draw : draw + 1;
    }
    r.observed_labels[i] = replacement;
    r.corrupted_mask[i] = replacement != truth;
  }
  return r;
}

CorruptionResult inject_asymmetric_pairs(std::span<const Label> labels, const NoiseSpec& spec) {
  check_common(labels, spec);
  if (spec.mapping.empty()) throw Error(ErrorCode::InvalidMapping, "asymmetric pair noise needs a mapping");
  std::map<Label, Label> targets;
  for (const auto& [from, to] : spec.mapping) {
    if (from >= spec.num_classes || to >= spec.num_classes) {
      throw Error(ErrorCode::InvalidMapping, "mapping " + std::to_string(from) + ">" + std::to_string(to) +
                                                 " references a class >= " + std::to_string(spec.num_classes));
    }
    if (from == to) throw Error(ErrorCode::InvalidMapping, "mapping sends class " + std::to_string(from) + " to itself");
    if (!targets.emplace(from, to).second) {
      throw Error(ErrorCode::InvalidMapping, "class " + std::to_string(from) + " mapped twice");
    }
  }
  return flip_per_class(labels, spec, targets);
}

Label circular_target(Label c, std::size_t superclass_size) {
  const auto s = static_cast<Label>(superclass_size);
  return (c / s) * s + (c % s + 1) % s;
}

CorruptionResult inject_asymmetric_circular(std::span<const Label> labels, const NoiseSpec& spec) {
  check_common(labels, spec);
  const std::size_t s = spec.superclass_size.value_or(0);
  if (s < 2 || spec.num_classes % s != 0) {
    throw Error(ErrorCode::InvalidSuperclass, "superclass size " + std::to_string(s) +
                                                  " must be >= 2 and divide K = " + std::to_string(spec.num_classes));
  }
  std::map<Label, Label> targets;
  for (Label c = 0; c < spec.num_classes; ++c) targets.emplace(c, circular_target(c, s));
  return flip_per_class(labels, spec, targets);
}

CorruptionResult inject(std::span<const Label> labels, const NoiseSpec& spec) {
  switch (spec.kind) {
    case NoiseKind::symmetric: return inject_symmetric(labels, spec);
    case NoiseKind::asymmetric_pairs: return inject_asymmetric_pairs(labels, spec);
    case NoiseKind::asymmetric_circular: return inject_asymmetric_circular(labels, spec);
  }
  throw Error(ErrorCode::InvalidSpec, "unknown noise kind");
}

ClassMapping parse_mapping(std::string_view text) {
  ClassMapping out;
  auto parse_id = [&](std::string_view token) {
    Label value = 0;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (token.empty() || ec != std::errc{} || ptr != end) {
      throw Error(ErrorCode::ParseError, "bad class id '" + std::string(token) + "' in mapping");
    }
    return value;
  };
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view pair = text.substr(0, comma);
    const auto gt = pair.find('>');
    if (gt == std::string_view::npos) {
      throw Error(ErrorCode::ParseError, "mapping entry '" + std::string(pair) + "' is not of the form from>to");
    }
    out.emplace_back(parse_id(pair.substr(0, gt)), parse_id(pair.substr(gt + 1)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

ClassMapping cifar10_asymmetric_mapping() {
  // airplane 0, automobile 1, bird 2, cat 3, deer 4, dog 5, horse 7, truck 9
  return {{9, 1}, {2, 0}, {4, 7}, {3, 5}, {5, 3}};
}

NoiseKind parse_noise_kind(std::string_view text) {
  if (text == "symmetric") return NoiseKind::symmetric;
  if (text == "asymmetric-pairs" || text == "asymmetric_pairs") return NoiseKind::asymmetric_pairs;
  if (text == "asymmetric-circular" || text == "asymmetric_circular") return NoiseKind::asymmetric_circular;
  throw Error(ErrorCode::ParseError, "unknown noise kind '" + std::string(text) + "'");
}

}  // namespace fine
