#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fine/error.hpp"
#include "fine/gmm.hpp"

using namespace fine;

namespace {

std::vector<double> mixture_draws(std::size_t n, double w_high, double mu_low, double sd_low, double mu_high,
                                  double sd_high, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> low(mu_low, sd_low), high(mu_high, sd_high);
  std::vector<double> x(n);
  for (auto& v : x) v = u(gen) < w_high ? high(gen) : low(gen);
  return x;
}

double weighted_density(double w, double mean, double var, double x) {
  return w * std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * M_PI * var);
}

}  // namespace

TEST_CASE("fit_gmm2: separated clusters recover per-cluster means") {
  const std::vector<double> scores{0.00, 0.01, 0.02, 1.00, 1.01};
  const GmmFit fit = fit_gmm2(scores);
  CHECK(std::abs(fit.mean_low - 0.01) <= 1e-3);
  CHECK(std::abs(fit.mean_high - 1.005) <= 1e-3);
  CHECK(fit.mean_low <= fit.mean_high);
}

TEST_CASE("fit_gmm2: parameter recovery on a known mixture") {
  const auto x = mixture_draws(10'000, 0.5, 0.0, 0.01, 1.0, 0.01, 42);
  const GmmFit fit = fit_gmm2(x);
  CHECK(std::abs(fit.mean_low - 0.0) <= 0.01);
  CHECK(std::abs(fit.mean_high - 1.0) <= 0.01);
  CHECK(std::abs(fit.weight_high - 0.5) <= 0.05);
  CHECK(std::sqrt(fit.var_high) == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("fit_gmm2: unbalanced overlapping mixture") {
  const auto x = mixture_draws(20'000, 0.8, 0.1, 0.05, 0.6, 0.1, 7);
  const GmmFit fit = fit_gmm2(x);
  CHECK(fit.mean_low == doctest::Approx(0.1).epsilon(0.1));
  CHECK(fit.mean_high == doctest::Approx(0.6).epsilon(0.05));
  CHECK(fit.weight_high == doctest::Approx(0.8).epsilon(0.05));
}

TEST_CASE("fit_gmm2: identical scores are a degenerate point mass") {
  const std::vector<double> x(10, 0.7);
  const GmmFit fit = fit_gmm2(x);
  CHECK(fit.degenerate);
  CHECK(fit.weight_high == 1.0);
  for (double s : {0.0, 0.7, 5.0}) CHECK(clean_posterior(fit, s) == 1.0);
}

TEST_CASE("fit_gmm2: too few samples and bad input") {
  try {
    fit_gmm2(std::vector<double>{1.0});
    FAIL("expected TooFewSamples");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewSamples);
  }
  CHECK_THROWS_AS(fit_gmm2(std::vector<double>{1.0, NAN}), Error);
}

TEST_CASE("clean_posterior: density-ratio values at the means") {
  const auto x = mixture_draws(4'000, 0.5, 0.0, 0.05, 1.0, 0.05, 3);
  const GmmFit fit = fit_gmm2(x);
  const auto direct = [&](double s) {
    const double hi = weighted_density(fit.weight_high, fit.mean_high, fit.var_high, s);
    const double lo = weighted_density(1.0 - fit.weight_high, fit.mean_low, fit.var_low, s);
    return hi / (hi + lo);
  };
  CHECK(clean_posterior(fit, fit.mean_high) > 0.999);
  CHECK(clean_posterior(fit, fit.mean_low) < 0.001);
  for (double s : {0.3, 0.45, 0.5, 0.55, 0.7}) CHECK(clean_posterior(fit, s) == doctest::Approx(direct(s)).epsilon(1e-9));
}

TEST_CASE("clean_posterior: one half at the weighted-density crossing") {
  const auto x = mixture_draws(4'000, 0.3, 0.2, 0.1, 0.9, 0.15, 5);
  const GmmFit fit = fit_gmm2(x);
  // Bisection on the weighted density difference between the means.
  const auto diff = [&](double s) {
    return weighted_density(fit.weight_high, fit.mean_high, fit.var_high, s) -
           weighted_density(1.0 - fit.weight_high, fit.mean_low, fit.var_low, s);
  };
  double lo = fit.mean_low, hi = fit.mean_high;
  REQUIRE(diff(lo) < 0.0);
  REQUIRE(diff(hi) > 0.0);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (diff(mid) < 0.0 ? lo : hi) = mid;
  }
  CHECK(std::abs(clean_posterior(fit, 0.5 * (lo + hi)) - 0.5) <= 1e-9);
}

TEST_CASE("clean_posterior is monotone in score for equal variances") {
  GmmFit fit;
  fit.mean_low = 0.1;
  fit.mean_high = 0.8;
  fit.var_low = fit.var_high = 0.02;
  fit.weight_high = 0.6;
  double prev = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double p = clean_posterior(fit, -1.0 + 3.0 * i / 400.0);
    CHECK(p >= prev);
    prev = p;
  }
}

TEST_CASE("EM log-likelihood is non-decreasing on fuzzed inputs") {
  std::mt19937_64 gen(1234);
  std::uniform_int_distribution<int> size(2, 300);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(size(gen));
    const auto x = mixture_draws(n, u(gen), u(gen), 0.01 + u(gen), u(gen) * 3, 0.01 + u(gen), gen());
    const GmmFit fit = fit_gmm2(x);
    for (std::size_t i = 1; i < fit.loglik_trace.size(); ++i) {
      CHECK(fit.loglik_trace[i] >= fit.loglik_trace[i - 1] - 1e-9);
    }
    CHECK(fit.mean_low <= fit.mean_high);
    CHECK(fit.var_low > 0.0);
    CHECK(fit.var_high > 0.0);
  }
}

TEST_CASE("fit is invariant under permutation") {
  auto x = mixture_draws(500, 0.4, 0.0, 0.1, 0.7, 0.1, 9);
  const GmmFit a = fit_gmm2(x);
  std::mt19937_64 gen(1);
  std::shuffle(x.begin(), x.end(), gen);
  const GmmFit b = fit_gmm2(x);
  CHECK(std::abs(a.mean_low - b.mean_low) <= 1e-9);
  CHECK(std::abs(a.mean_high - b.mean_high) <= 1e-9);
  CHECK(std::abs(a.var_low - b.var_low) <= 1e-9);
  CHECK(std::abs(a.var_high - b.var_high) <= 1e-9);
  CHECK(std::abs(a.weight_high - b.weight_high) <= 1e-9);
}

TEST_CASE("fit is affine equivariant") {
  const auto x = mixture_draws(800, 0.6, 0.1, 0.05, 0.5, 0.08, 21);
  const GmmFit base = fit_gmm2(x);
  for (const auto [a, b] : {std::pair{2.0, 1.0}, std::pair{0.5, -3.0}, std::pair{10.0, 0.25}}) {
    std::vector<double> y(x);
    for (auto& v : y) v = a * v + b;
    const GmmFit fit = fit_gmm2(y);
    CHECK(fit.mean_low == doctest::Approx(a * base.mean_low + b).epsilon(1e-6));
    CHECK(fit.mean_high == doctest::Approx(a * base.mean_high + b).epsilon(1e-6));
    CHECK(fit.var_low == doctest::Approx(a * a * base.var_low).epsilon(1e-6));
    CHECK(fit.var_high == doctest::Approx(a * a * base.var_high).epsilon(1e-6));
    CHECK(fit.weight_high == doctest::Approx(base.weight_high).epsilon(1e-6));
  }
}
