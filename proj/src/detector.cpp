#include "fine/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fine/error.hpp"
#include "fine/parallel.hpp"
#include "fine/random.hpp"

namespace fine {
namespace {

using IndexSets = std::vector<std::vector<std::size_t>>;

// Stream ids, offset by class index.
constexpr std::uint64_t kEigenStream = 0x1000;
constexpr std::uint64_t kSubsampleStream = 0x2000;
constexpr std::uint64_t kSimilarityStream = 0x3000;

void check_dataset(const Dataset& dataset) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no samples");
  dataset.validate();
}

void check_options(const FineOptions& options) {
  if (!(options.zeta >= 0.0 && options.zeta <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "zeta must lie in [0, 1]");
  }
  if (!(options.subsample_fraction > 0.0 && options.subsample_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "subsample fraction must lie in (0, 1]");
  }
}

IndexSets class_members(const Dataset& dataset) {
  IndexSets members(dataset.num_classes);
  for (std::size_t i = 0; i < dataset.size(); ++i) members[dataset.observed_labels[i]].push_back(i);
  return members;
}

GramMatrix gram_of(const Dataset& dataset, std::span<const std::size_t> rows) {
  GramMatrix gram(dataset.dim);
  for (std::size_t i : rows) gram.add(dataset.row(i));
  return gram;
}

bool keep_whole(const GmmFit& fit, const FineOptions& options) {
  if (fit.degenerate) return true;
  if (!options.keep_unimodal) return false;
  if (fit.single_component_preferred()) return true;
  const double spread = fit.var_low + fit.var_high;
  const double separation =
      spread > 0.0 ? std::abs(fit.mean_high - fit.mean_low) * std::sqrt(2.0 / spread) : 0.0;
  return separation <= options.min_separation;
}

EigenPair zero_eigenpair(std::size_t d) {
  EigenPair e;
  e.u.assign(d, 0.0);
  e.u[0] = 1.0;
  e.gap_degenerate = true;
  return e;
}

// One selection round. `gram_sets[k]` feeds the class-k eigenvector;
// `eligible[k]` are the class-k samples the GMM is fitted on and that may be
// selected. Every member is scored.
SelectionResult run_round(const Dataset& dataset, const IndexSets& members, const IndexSets& gram_sets,
                          const IndexSets& eligible, const FineOptions& options) {
  const std::size_t k_count = dataset.num_classes;
  const std::size_t n = dataset.size();
  SelectionResult result;
  result.fine_scores.assign(n, 0.0);
  result.clean_prob.assign(n, 0.0);
  result.per_class_eigen.resize(k_count);
  std::vector<std::vector<std::string>> notes(k_count);

  parallel_for(k_count, options.threads, [&](std::size_t k) {
    if (members[k].empty()) {
      result.per_class_eigen[k] = zero_eigenpair(dataset.dim);
      return;
    }
    const GramMatrix gram = gram_of(dataset, gram_sets[k]);
    EigenPair eig = top_eigenpair(gram, options.eigen, stream_seed(options.seed, kEigenStream + k));
    if (eig.gap_degenerate) {
      notes[k].push_back("class " + std::to_string(k) + ": top eigenvalue gap is degenerate");
    }
    for (std::size_t i : members[k]) result.fine_scores[i] = fine_score(eig.u, dataset.row(i));
    result.per_class_eigen[k] = std::move(eig);
  });

  if (options.gmm_scope == GmmScope::per_class) {
    result.gmm_fits.resize(k_count);
    parallel_for(k_count, options.threads, [&](std::size_t k) {
      const auto& set = eligible[k];
      if (members[k].empty()) return;
      if (set.size() < 2) {
        notes[k].push_back("class " + std::to_string(k) + ": fewer than two samples, all kept");
        for (std::size_t i : set) result.clean_prob[i] = 1.0;
        return;
      }
      std::vector<double> scores;
      scores.reserve(set.size());
      for (std::size_t i : set) scores.push_back(result.fine_scores[i]);
      GmmFit fit = fit_gmm2(scores, options.gmm);
      if (keep_whole(fit, options)) {
        notes[k].push_back("class " + std::to_string(k) + ": no second score cluster, all kept");
        for (std::size_t i : set) result.clean_prob[i] = 1.0;
      } else {
        for (std::size_t i : set) result.clean_prob[i] = clean_posterior(fit, result.fine_scores[i]);
      }
      result.gmm_fits[k] = std::move(fit);
    });
  } else {
    std::vector<std::size_t> all;
    for (const auto& set : eligible) all.insert(all.end(), set.begin(), set.end());
    std::sort(all.begin(), all.end());
    result.gmm_fits.resize(1);
    if (all.size() < 2) {
      result.warnings.push_back("global: fewer than two samples, all kept");
      for (std::size_t i : all) result.clean_prob[i] = 1.0;
    } else {
      std::vector<double> scores;
      scores.reserve(all.size());
      for (std::size_t i : all) scores.push_back(result.fine_scores[i]);
      GmmFit fit = fit_gmm2(scores, options.gmm);
      if (keep_whole(fit, options)) {
        result.warnings.push_back("global: no second score cluster, all kept");
        for (std::size_t i : all) result.clean_prob[i] = 1.0;
      } else {
        for (std::size_t i : all) result.clean_prob[i] = clean_posterior(fit, result.fine_scores[i]);
      }
      result.gmm_fits[0] = std::move(fit);
    }
  }

  result.clean_mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.clean_mask[i] = result.clean_prob[i] >= options.zeta;
  for (auto& class_notes : notes) {
    for (auto& note : class_notes) result.warnings.push_back(std::move(note));
  }
  return result;
}

}  // namespace

std::size_t SelectionResult::clean_count() const {
  return static_cast<std::size_t>(std::count(clean_mask.begin(), clean_mask.end(), true));
}

double fine_score(std::span<const double> u, std::span<const double> z) {
  const double p = dot(u, z);
  return p * p;
}

SelectionResult fine_select(const Dataset& dataset, const FineOptions& options) {
  check_dataset(dataset);
  check_options(options);
  const IndexSets members = class_members(dataset);
  IndexSets gram_sets(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    const auto& m = members[k];
    if (options.subsample_fraction >= 1.0 || m.empty()) {
      gram_sets[k] = m;
      continue;
    }
    const std::size_t take = std::max<std::size_t>(1, exact_count(options.subsample_fraction, m.size()));
    Rng rng(options.seed, kSubsampleStream + k);
    for (std::size_t j : rng.sample_without_replacement(m.size(), take)) gram_sets[k].push_back(m[j]);
  }
  SelectionResult result = run_round(dataset, members, gram_sets, members, options);
  result.rounds_run = 1;
  return result;
}

SelectionResult fine_iterate(const Dataset& dataset, int rounds, const FineOptions& options) {
  if (rounds < 1) throw Error(ErrorCode::InvalidArgument, "rounds must be at least 1");
  SelectionResult result = fine_select(dataset, options);
  const IndexSets members = class_members(dataset);
  for (int round = 2; round <= rounds; ++round) {
    IndexSets clean_sets(members.size());
    std::vector<std::string> notes;
    for (std::size_t k = 0; k < members.size(); ++k) {
      for (std::size_t i : members[k]) {
        if (result.clean_mask[i]) clean_sets[k].push_back(i);
      }
      if (clean_sets[k].empty() && !members[k].empty()) {
        notes.push_back("round " + std::to_string(round) + ", class " + std::to_string(k) +
                        ": clean set empty, reverting to all class samples");
        clean_sets[k] = members[k];
      }
    }
    const IndexSets& eligible = options.score_scope == ScoreScope::all ? members : clean_sets;
    SelectionResult next = run_round(dataset, members, clean_sets, eligible, options);
    next.warnings.insert(next.warnings.begin(), notes.begin(), notes.end());
    next.warnings.insert(next.warnings.begin(), result.warnings.begin(), result.warnings.end());
    result = std::move(next);
    result.rounds_run = round;
  }
  return result;
}

SimilarityTable subsample_similarity(const Dataset& dataset, std::span<const double> fractions, int trials,
                                     const FineOptions& options) {
  check_dataset(dataset);
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be at least 1");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw Error(ErrorCode::InvalidArgument, "fractions must lie in (0, 1]");
  }
  const IndexSets members = class_members(dataset);
  const std::size_t k_count = members.size();

  std::vector<std::optional<EigenPair>> full(k_count);
  parallel_for(k_count, options.threads, [&](std::size_t k) {
    if (members[k].size() < 2) return;
    full[k] = top_eigenpair(gram_of(dataset, members[k]), options.eigen,
                            stream_seed(options.seed, kEigenStream + k));
  });

  const std::size_t n_trials = static_cast<std::size_t>(trials);
  const std::size_t cells = fractions.size() * n_trials * k_count;
  std::vector<double> cosines(cells, std::numeric_limits<double>::quiet_NaN());
  parallel_for(cells, options.threads, [&](std::size_t cell) {
    const std::size_t k = cell % k_count;
    const std::size_t f = cell / (k_count * n_trials);
    if (!full[k]) return;
    const auto& m = members[k];
    const std::size_t take = exact_count(fractions[f], m.size());
    if (take < 2) return;
    std::vector<std::size_t> rows;
    if (take == m.size()) {
      rows = m;
    } else {
      Rng rng(options.seed, kSimilarityStream + cell);
      for (std::size_t j : rng.sample_without_replacement(m.size(), take)) rows.push_back(m[j]);
    }
    const EigenPair sub =
        top_eigenpair(gram_of(dataset, rows), options.eigen, stream_seed(options.seed, kEigenStream + k));
    cosines[cell] = std::min(1.0, std::abs(dot(sub.u, full[k]->u)));
  });

  SimilarityTable table;
  for (std::size_t k = 0; k < k_count; ++k) {
    if (!members[k].empty() && members[k].size() < 2) {
      table.warnings.push_back("class " + std::to_string(k) + ": fewer than two samples, skipped");
    }
  }
  for (std::size_t f = 0; f < fractions.size(); ++f) {
    SimilarityRow row;
    row.fraction = fractions[f];
    std::vector<double> per_trial;
    for (std::size_t t = 0; t < n_trials; ++t) {
      double sum = 0.0;
      std::size_t used = 0;
      for (std::size_t k = 0; k < k_count; ++k) {
        const double c = cosines[(f * n_trials + t) * k_count + k];
        if (std::isnan(c)) continue;
        sum += c;
        ++used;
      }
      row.cells += used;
      if (used > 0) per_trial.push_back(sum / static_cast<double>(used));
    }
    for (std::size_t k = 0; k < k_count; ++k) {
      if (full[k] && exact_count(fractions[f], members[k].size()) < 2) {
        table.warnings.push_back("fraction " + std::to_string(fractions[f]) + ", class " + std::to_string(k) +
                                 ": fewer than two subsampled samples, skipped");
      }
    }
    if (!per_trial.empty()) {
      const double mean = std::accumulate(per_trial.begin(), per_trial.end(), 0.0) /
                          static_cast<double>(per_trial.size());
      double ss = 0.0;
      for (double v : per_trial) ss += (v - mean) * (v - mean);
      row.mean_abs_cos = mean;
      row.std_abs_cos = per_trial.size() > 1 ? std::sqrt(ss / static_cast<double>(per_trial.size() - 1)) : 0.0;
    } else {
      row.mean_abs_cos = std::numeric_limits<double>::quiet_NaN();
    }
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace fine
