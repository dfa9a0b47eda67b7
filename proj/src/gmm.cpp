#include "fine/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fine/error.hpp"

namespace fine {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // log(2 pi) / 2

double log_normal(double x, double mean, double var) {
  const double r = x - mean;
  return -kHalfLog2Pi - 0.5 * std::log(var) - 0.5 * r * r / var;
}

double log_add(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct Params {
  double mean[2];
  double var[2];
  double weight[2];
};

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double var_of(std::span<const double> x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size());
}

// E-step: fills resp_high and returns the log-likelihood of `p`.
double expectation(const Params& p, std::span<const double> x, std::vector<double>& resp_high) {
  const double lw0 = std::log(p.weight[0]);
  const double lw1 = std::log(p.weight[1]);
  double ll = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = lw0 + log_normal(x[i], p.mean[0], p.var[0]);
    const double b = lw1 + log_normal(x[i], p.mean[1], p.var[1]);
    const double total = log_add(a, b);
    resp_high[i] = std::exp(b - total);
    ll += total;
  }
  return ll;
}

}  // namespace

GmmFit fit_gmm2(std::span<const double> scores, const GmmOptions& options) {
  if (scores.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "GMM needs at least two scores, got " +
                                              std::to_string(scores.size()));
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error(ErrorCode::InvalidArgument, "non-finite GMM score");
  }

  // Sorting makes the fit a function of the multiset, not the input order.
  std::vector<double> x(scores.begin(), scores.end());
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();

  GmmFit fit;
  if (x.front() == x.back()) {
    fit.degenerate = true;
    fit.mean_low = fit.mean_high = x.front();
    fit.var_low = fit.var_high = 1e-12;
    fit.weight_high = 1.0;
    fit.converged = true;
    return fit;
  }

  const double total_mean = mean_of(x);
  const double var_floor = options.var_floor_rel * var_of(x, total_mean) + 1e-12;

  Params p{};
  const std::size_t half = n / 2;
  const std::span<const double> low(x.data(), half);
  const std::span<const double> high(x.data() + half, n - half);
  p.mean[0] = mean_of(low);
  p.mean[1] = mean_of(high);
  p.var[0] = std::max(var_of(low, p.mean[0]), var_floor);
  p.var[1] = std::max(var_of(high, p.mean[1]), var_floor);
  p.weight[0] = static_cast<double>(low.size()) / static_cast<double>(n);
  p.weight[1] = static_cast<double>(high.size()) / static_cast<double>(n);

  std::vector<double> resp(n);
  double previous = expectation(p, x, resp);
  fit.loglik_trace.push_back(previous);

  for (int it = 1; it <= options.max_iter; ++it) {
    // M-step.
    double nk[2] = {0.0, 0.0};
    double sx[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      nk[1] += resp[i];
      nk[0] += 1.0 - resp[i];
      sx[1] += resp[i] * x[i];
      sx[0] += (1.0 - resp[i]) * x[i];
    }
    Params next = p;
    for (int k = 0; k < 2; ++k) {
      if (nk[k] <= 0.0) continue;  // empty component keeps its parameters
      next.mean[k] = sx[k] / nk[k];
    }
    double sv[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      const double r0 = x[i] - next.mean[0];
      const double r1 = x[i] - next.mean[1];
      sv[0] += (1.0 - resp[i]) * r0 * r0;
      sv[1] += resp[i] * r1 * r1;
    }
    for (int k = 0; k < 2; ++k) {
      if (nk[k] <= 0.0) continue;
      next.var[k] = std::max(sv[k] / nk[k], var_floor);
    }
    next.weight[1] = nk[1] / static_cast<double>(n);
    next.weight[0] = 1.0 - next.weight[1];
    p = next;

    const double ll = expectation(p, x, resp);
    fit.loglik_trace.push_back(ll);
    fit.iterations = it;
    if (std::abs(ll - previous) < options.tol) {
      fit.converged = true;
      break;
    }
    previous = ll;
  }

  const double log_n = std::log(static_cast<double>(n));
  double single_ll = 0.0;
  const double single_var = std::max(var_of(x, total_mean), var_floor);
  for (double v : x) single_ll += log_normal(v, total_mean, single_var);
  fit.bic_mixture = -2.0 * fit.loglik_trace.back() + 5.0 * log_n;
  fit.bic_single = -2.0 * single_ll + 2.0 * log_n;

  const int lo = p.mean[0] <= p.mean[1] ? 0 : 1;
  const int hi = 1 - lo;
  fit.mean_low = p.mean[lo];
  fit.mean_high = p.mean[hi];
  fit.var_low = p.var[lo];
  fit.var_high = p.var[hi];
  fit.weight_high = p.weight[hi];
  return fit;
}

double clean_posterior(const GmmFit& fit, double score) {
  if (fit.degenerate) return 1.0;
  const double a = std::log1p(-fit.weight_high) + log_normal(score, fit.mean_low, fit.var_low);
  const double b = std::log(fit.weight_high) + log_normal(score, fit.mean_high, fit.var_high);
  if (a == b) return 0.5;
  // 1 / (1 + exp(a - b)), stable for large |a - b|.
  const double t = a - b;
  if (t > 0.0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

double gmm_loglik(const GmmFit& fit, std::span<const double> scores) {
  double ll = 0.0;
  for (double s : scores) {
    const double a = std::log1p(-fit.weight_high) + log_normal(s, fit.mean_low, fit.var_low);
    const double b = std::log(fit.weight_high) + log_normal(s, fit.mean_high, fit.var_high);
    ll += log_add(a, b);
  }
  return ll;
}

}  // namespace fine
