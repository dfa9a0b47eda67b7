#pragma once

#include <span>
#include <vector>

namespace fine {

/// Two-component 1-D Gaussian mixture. The high-mean component is the
/// "clean" one.
struct GmmFit {
  double mean_low = 0.0;
  double mean_high = 0.0;
  double var_low = 1.0;
  double var_high = 1.0;
  double weight_high = 1.0;
  std::vector<double> loglik_trace;
  int iterations = 0;
  bool converged = false;
  // All scores identical: a single point mass, every posterior is 1.
  bool degenerate = false;
  // Bayesian information criterion of the fitted mixture (5 parameters) and
  // of a single Gaussian (2 parameters) on the same scores; lower is better.
  double bic_mixture = 0.0;
  double bic_single = 0.0;

  /// A single Gaussian explains the scores at least as well as two.
  bool single_component_preferred() const { return degenerate || bic_single <= bic_mixture; }
};

struct GmmOptions {
  int max_iter = 200;
  double tol = 1e-6;
  double var_floor_rel = 1e-8;
};

/// EM fit initialised by splitting the sorted scores at the median.
/// Throws TooFewSamples for fewer than two scores and InvalidArgument on
/// non-finite input.
GmmFit fit_gmm2(std::span<const double> scores, const GmmOptions& options = {});

/// Posterior probability of the high-mean component at `score`.
double clean_posterior(const GmmFit& fit, double score);

/// Mixture log-likelihood of `scores` under `fit`.
double gmm_loglik(const GmmFit& fit, std::span<const double> scores);

}  // namespace fine
