#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fine/dataset.hpp"
#include "fine/gmm.hpp"
#include "fine/linalg.hpp"

namespace fine {

enum class GmmScope { per_class, global };

/// Which samples the GMM split is applied to in refinement rounds.
enum class ScoreScope { all, prev_clean };

struct FineOptions {
  double zeta = 0.5;
  double subsample_fraction = 1.0;
  std::uint64_t seed = 42;
  EigenOptions eigen;
  GmmOptions gmm;
  GmmScope gmm_scope = GmmScope::per_class;
  ScoreScope score_scope = ScoreScope::all;
  // Keep a class whole when one Gaussian fits its scores at least as well as
  // two (BIC); otherwise the mixture always splits, even with no noise.
  bool keep_unimodal = true;
  // Also require Ashman's D = |mu_hi - mu_lo| * sqrt(2 / (var_lo + var_hi))
  // above this before splitting; D <= 2 means the fitted mixture is unimodal.
  double min_separation = 2.0;
  unsigned threads = 1;  // 0 = hardware concurrency
};

struct SelectionResult {
  std::vector<double> fine_scores;
  std::vector<double> clean_prob;
  std::vector<bool> clean_mask;
  std::vector<EigenPair> per_class_eigen;
  // One fit per class (per_class scope) or a single fit (global scope);
  // empty where no fit was possible.
  std::vector<std::optional<GmmFit>> gmm_fits;
  int rounds_run = 0;
  std::vector<std::string> warnings;

  std::size_t clean_count() const;
};

/// One pass of FINE sample selection.
///
/// Per observed class k: accumulate the gram matrix over a seeded subsample
/// (fraction `subsample_fraction`, 1 = every sample) of the class, take its
/// top eigenvector u_k, score every class-k sample by <u_k, z_i>^2, fit a
/// two-component GMM to the scores and keep samples whose clean posterior is
/// >= zeta. Classes with fewer than two samples, or whose scores are all
/// equal or unimodal (see FineOptions::keep_unimodal), are kept whole and
/// reported in `warnings`.
SelectionResult fine_select(const Dataset& dataset, const FineOptions& options = {});

/// `rounds` passes of FINE; round r >= 2 builds each class gram from the
/// previous round's clean samples. rounds == 1 is fine_select.
SelectionResult fine_iterate(const Dataset& dataset, int rounds, const FineOptions& options = {});

struct SimilarityRow {
  double fraction = 0.0;
  double mean_abs_cos = 0.0;
  double std_abs_cos = 0.0;  // across trials of the class-averaged |cos|
  std::size_t cells = 0;     // (class, trial) pairs that contributed
};

struct SimilarityTable {
  std::vector<SimilarityRow> rows;
  std::vector<std::string> warnings;
};

/// |<u_sub, u_full>| between each class's full-data eigenvector and the one
/// computed from a seeded subsample, for every fraction over `trials` draws.
SimilarityTable subsample_similarity(const Dataset& dataset, std::span<const double> fractions, int trials,
                                     const FineOptions& options = {});

/// <u, z>^2.
double fine_score(std::span<const double> u, std::span<const double> z);

}  // namespace fine
