#include "fine/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fine/error.hpp"
#include "fine/random.hpp"

namespace fine {

Metrics compute_prf(const std::vector<bool>& clean_mask, const std::vector<bool>& true_mask) {
  if (clean_mask.size() != true_mask.size()) {
    throw Error(ErrorCode::LengthMismatch, "selection mask has " + std::to_string(clean_mask.size()) +
                                               " entries, truth mask " + std::to_string(true_mask.size()));
  }
  Metrics m;
  for (std::size_t i = 0; i < clean_mask.size(); ++i) {
    const bool selected = clean_mask[i];
    const bool clean = true_mask[i];
    if (selected && clean) ++m.tp;
    else if (selected) ++m.fp;
    else if (clean) ++m.fn;
    else ++m.tn;
  }
  const auto ratio = [](std::size_t num, std::size_t den, bool& undefined) {
    undefined = den == 0;
    return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = ratio(m.tp, m.tp + m.fp, m.precision_undefined);
  m.recall = ratio(m.tp, m.tp + m.fn, m.recall_undefined);
  const double sum = m.precision + m.recall;
  m.f_score = sum > 0.0 ? 2.0 * m.precision * m.recall / sum : 0.0;
  return m;
}

double perturbation_bound(const BoundParams& p) {
  if (p.n_plus < 1) throw Error(ErrorCode::InvalidArgument, "n_plus must be at least 1");
  if (!(p.delta > 0.0 && p.delta < 1.0)) throw Error(ErrorCode::InvalidDelta, "delta must lie in (0, 1)");
  if (!(p.constant_c >= 0.0)) throw Error(ErrorCode::InvalidArgument, "constant_c must be >= 0");
  const double tau = p.tau();
  const double concentration = p.constant_c * p.sigma * p.sigma *
                               std::sqrt((static_cast<double>(p.d) + std::log(4.0 / p.delta)) /
                                         static_cast<double>(p.n_plus));
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  const double numerator = 3.0 * tau * c + concentration;
  const double denominator = 1.0 - tau * (s + 3.0 * c) - concentration;
  if (denominator <= 0.0) return std::numeric_limits<double>::infinity();
  return numerator / denominator;
}

double calibrate_constant(const BoundParams& params, double target) {
  BoundParams p = params;
  p.constant_c = 0.0;
  if (perturbation_bound(p) >= target) return 0.0;
  const double unit = p.sigma * p.sigma *
                      std::sqrt((static_cast<double>(p.d) + std::log(4.0 / p.delta)) / static_cast<double>(p.n_plus));
  const double room = 1.0 - p.tau() * (std::sin(p.theta) + 3.0 * std::cos(p.theta));
  if (!(unit > 0.0) || !(room > 0.0)) return std::numeric_limits<double>::infinity();
  // bound grows with C and diverges at C = room / unit
  double lo = 0.0, hi = room / unit;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    p.constant_c = mid;
    (perturbation_bound(p) >= target ? hi : lo) = mid;
  }
  return hi;
}

BoundReport empirical_perturbation(const SyntheticDataset& data, std::uint64_t seed, double delta,
                                   double constant_c, const EigenOptions& eigen) {
  const auto& spec = data.spec;
  GramMatrix gram(spec.d);
  for (std::size_t i = 0; i < data.size(); ++i) gram.add(data.row(i));
  const EigenPair eig = top_eigenpair(gram, eigen, seed);

  BoundReport r;
  r.empirical_perturbation = projector_distance(eig.u, data.v);
  r.n_plus = spec.n_clean;
  r.n_minus = spec.n_noisy;
  r.tau = spec.tau();
  r.theta = spec.theta;
  r.sigma = spec.sigma;
  r.d = spec.d;
  r.delta = delta;
  r.constant_c = constant_c;
  r.bound_rhs = perturbation_bound({spec.n_clean, spec.n_noisy, spec.theta, spec.sigma, spec.d, delta, constant_c});
  r.gap_degenerate = eig.gap_degenerate;
  r.u = eig.u;
  return r;
}

PrSample simulate_midpoint_rule(double delta_gap, double sigma, std::size_t n_plus, std::size_t n_minus,
                                std::uint64_t seed) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidSigma, "sigma must be positive");
  if (n_plus == 0) throw Error(ErrorCode::InvalidArgument, "n_plus must be at least 1");
  const double b = 0.5 * delta_gap;
  Rng plus(seed, 1), minus(seed, 2);
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < n_plus; ++i) tp += delta_gap + sigma * plus.normal() > b;
  for (std::size_t i = 0; i < n_minus; ++i) fp += sigma * minus.normal() > b;
  PrSample s;
  s.recall = static_cast<double>(tp) / static_cast<double>(n_plus);
  s.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  return s;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

PrBounds pr_lower_bounds(const PrInputs& in) {
  if (!(in.sigma > 0.0)) throw Error(ErrorCode::InvalidSigma, "sigma must be positive");
  if (!(in.delta > 0.0 && in.delta < 1.0)) throw Error(ErrorCode::InvalidDelta, "delta must lie in (0, 1)");
  if (in.n_plus < 1 || in.n_minus < 1) throw Error(ErrorCode::InvalidArgument, "cluster sizes must be >= 1");
  if (in.p_plus < 0.0 || in.p_minus < 0.0 || std::abs(in.p_plus + in.p_minus - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "p_plus and p_minus must be non-negative and sum to 1");
  }
  const double slack = 2.0 * in.constant_c *
                       std::sqrt((1.0 / static_cast<double>(in.n_plus) + 1.0 / static_cast<double>(in.n_minus)) *
                                 std::log(2.0 / in.delta));
  const double hit_clean = normal_cdf((in.delta_gap - slack) / (2.0 * in.sigma));
  const double hit_noisy = normal_cdf((-in.delta_gap - slack) / (2.0 * in.sigma));

  PrBounds out;
  out.inputs = in;
  out.delta_gap = in.delta_gap;
  out.recall_lb = std::clamp(hit_clean, 0.0, 1.0);
  const double clean_mass = in.p_plus * hit_clean;
  out.precision_lb = clean_mass > 0.0 ? std::clamp(1.0 / (1.0 + in.p_minus * hit_noisy / clean_mass), 0.0, 1.0) : 0.0;
  return out;
}

std::vector<HeatmapPoint> hyperplane_heatmap(std::span<const double> rows, const std::vector<bool>& true_mask,
                                             std::span<const double> u, const HeatmapOptions& options) {
  const std::size_t d = u.size();
  if (d == 0 || rows.size() != true_mask.size() * d) {
    throw Error(ErrorCode::DimensionMismatch, "heatmap rows do not match the direction's dimension");
  }
  if (std::abs(norm2(u) - 1.0) > 1e-6) throw Error(ErrorCode::NotUnit, "heatmap direction must be a unit vector");
  if (options.resolution == 0) throw Error(ErrorCode::InvalidArgument, "resolution must be positive");

  // r: seeded Gaussian direction with the u component removed.
  Rng rng(options.seed, 0x68'65'61'74);  // "heat"
  Vector r;
  double rn = 0.0;
  do {
    r = rng.unit_vector(d);
    for (int pass = 0; pass < 2; ++pass) {
      const double c = dot(r, u);
      for (std::size_t i = 0; i < d; ++i) r[i] -= c * u[i];
    }
    rn = norm2(r);
  } while (rn < 1e-8);
  for (auto& x : r) x /= rn;

  // Second moments of the (u, r) projections per group; the objective is a
  // quadratic form in (cos phi, sin phi).
  double m[2][3] = {{0, 0, 0}, {0, 0, 0}};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < true_mask.size(); ++i) {
    const std::span<const double> x = rows.subspan(i * d, d);
    const double p = dot(u, x);
    const double q = dot(r, x);
    const int g = true_mask[i] ? 0 : 1;
    m[g][0] += p * p;
    m[g][1] += p * q;
    m[g][2] += q * q;
    ++count[g];
  }
  if (count[0] == 0) throw Error(ErrorCode::EmptySet, "heatmap needs at least one clean sample");
  if (count[1] == 0 && !options.clean_only) throw Error(ErrorCode::EmptySet, "heatmap needs at least one noisy sample");
  double coef[3];
  for (int j = 0; j < 3; ++j) {
    coef[j] = m[0][j] / static_cast<double>(count[0]);
    if (!options.clean_only) coef[j] -= m[1][j] / static_cast<double>(count[1]);
  }

  const std::size_t res = options.resolution;
  const bool even = res % 2 == 0;
  std::vector<HeatmapPoint> out(res);
  for (std::size_t i = 0; i < res; ++i) {
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(res);
    double c = 0.0;
    double s = 0.0;
    if (even && i >= res / 2) {
      // a(phi + pi) = -a(phi); reuse the first half so the symmetry is exact.
      const double base = 2.0 * std::numbers::pi * static_cast<double>(i - res / 2) / static_cast<double>(res);
      c = -std::cos(base);
      s = -std::sin(base);
    } else {
      c = std::cos(phi);
      s = std::sin(phi);
    }
    out[i] = {phi, c * c * coef[0] + 2.0 * c * s * coef[1] + s * s * coef[2]};
  }
  return out;
}

}  // namespace fine
