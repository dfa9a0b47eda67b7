#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fine/linalg.hpp"
#include "fine/synthetic.hpp"

namespace fine {

// ---------------------------------------------------------------------------
// Selection metrics. Selected samples are predictions of the positive (clean)
// class.
// ---------------------------------------------------------------------------

struct Metrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  bool precision_undefined = false;  // nothing selected
  bool recall_undefined = false;     // no clean samples
};

Metrics compute_prf(const std::vector<bool>& clean_mask, const std::vector<bool>& true_mask);

// ---------------------------------------------------------------------------
// Eigenvector perturbation bound.
// ---------------------------------------------------------------------------

struct BoundParams {
  std::size_t n_plus = 1;
  std::size_t n_minus = 0;
  double theta = 0.0;
  double sigma = 0.0;
  std::size_t d = 1;
  double delta = 0.05;
  double constant_c = 1.0;

  double tau() const { return static_cast<double>(n_minus) / static_cast<double>(n_plus); }
};

/// (3 tau cos(theta) + o) / (1 - tau (sin(theta) + 3 cos(theta)) - o), with
/// o = C sigma^2 sqrt((d + log(4/delta)) / N+). +infinity when the
/// denominator is <= 0.
double perturbation_bound(const BoundParams& params);

/// Smallest constant_c >= 0 for which perturbation_bound(params) >= target
/// (params.constant_c is ignored). +infinity if no finite C reaches it.
double calibrate_constant(const BoundParams& params, double target);

struct BoundReport {
  double empirical_perturbation = 0.0;
  double bound_rhs = 0.0;
  double tau = 0.0;
  double theta = 0.0;
  double sigma = 0.0;
  std::size_t d = 0;
  std::size_t n_plus = 0;
  std::size_t n_minus = 0;
  double delta = 0.0;
  double constant_c = 0.0;
  bool gap_degenerate = false;
  Vector u;
};

/// ||u u^T - v v^T||_2 for the top eigenvector u of the whole synthetic
/// gram, paired with the bound for the dataset's own tau, theta, sigma, d.
BoundReport empirical_perturbation(const SyntheticDataset& data, std::uint64_t seed, double delta = 0.05,
                                   double constant_c = 1.0, const EigenOptions& eigen = {});

// ---------------------------------------------------------------------------
// Precision / recall lower bounds for the midpoint decision boundary on the
// projected two-Gaussian model.
// ---------------------------------------------------------------------------

struct PrInputs {
  double delta_gap = 0.0;  // difference of projected cluster means
  double sigma = 1.0;
  std::size_t n_plus = 1;
  std::size_t n_minus = 1;
  double delta = 0.05;
  double constant_c = 1.0;
  double p_plus = 0.5;
  double p_minus = 0.5;
};

struct PrBounds {
  double recall_lb = 0.0;
  double precision_lb = 0.0;
  double delta_gap = 0.0;
  PrInputs inputs;
};

/// recall >= Phi((D - s) / 2 sigma) and
/// precision >= 1 / (1 + p- Phi((-D - s) / 2 sigma) / (p+ Phi((D - s) / 2 sigma)))
/// with s = 2 C sqrt((1/N+ + 1/N-) log(2/delta)).
PrBounds pr_lower_bounds(const PrInputs& inputs);

struct PrSample {
  double recall = 0.0;
  double precision = 0.0;
};

/// Draws n_plus scores from N(delta_gap, sigma^2) and n_minus from
/// N(0, sigma^2) and applies the midpoint rule z > delta_gap / 2.
PrSample simulate_midpoint_rule(double delta_gap, double sigma, std::size_t n_plus, std::size_t n_minus,
                                std::uint64_t seed);

/// Standard normal CDF.
double normal_cdf(double x);

// ---------------------------------------------------------------------------
// Objective of a unit direction a on a plane through u:
//   mean_{clean} <a, x>^2 - mean_{noisy} <a, x>^2
// ---------------------------------------------------------------------------

struct HeatmapPoint {
  double phi = 0.0;
  double value = 0.0;
};

struct HeatmapOptions {
  std::size_t resolution = 360;
  std::uint64_t seed = 0;
  bool clean_only = false;  // drop the noisy term
};

/// Evaluates the objective at a(phi) = cos(phi) u + sin(phi) r on a uniform
/// grid over [0, 2 pi), r being a seeded random unit vector orthogonal to u.
/// `rows` holds row-major features of dimension u.size().
std::vector<HeatmapPoint> hyperplane_heatmap(std::span<const double> rows, const std::vector<bool>& true_mask,
                                             std::span<const double> u, const HeatmapOptions& options);

}  // namespace fine
