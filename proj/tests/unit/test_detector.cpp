#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fine/analysis.hpp"
#include "fine/detector.hpp"
#include "fine/error.hpp"
#include "fine/noise.hpp"
#include "fine/synthetic.hpp"

using namespace fine;

namespace {

Dataset noisy_multiclass(std::size_t d, std::size_t k, std::size_t per_class, double sigma, NoiseSpec noise,
                         std::uint64_t seed) {
  Dataset ds = generate_multiclass(d, k, per_class, sigma, seed).dataset;
  noise.num_classes = k;
  noise.seed = seed + 1000;
  const auto corrupted = inject(ds.observed_labels, noise);
  ds.observed_labels = corrupted.observed_labels;
  return ds;
}

double f_score(const SelectionResult& r, const Dataset& ds) { return compute_prf(r.clean_mask, ds.clean_mask()).f_score; }

}  // namespace

TEST_CASE("fine_select: symmetric noise is filtered") {
  const Dataset ds = noisy_multiclass(128, 10, 1'000, 0.05, {.kind = NoiseKind::symmetric, .rate = 0.2}, 1);
  const SelectionResult r = fine_select(ds);
  CHECK(f_score(r, ds) >= 0.95);
  CHECK(r.rounds_run == 1);
  CHECK(r.per_class_eigen.size() == 10);
}

TEST_CASE("fine_select: noise-free data is kept") {
  const Dataset ds = generate_multiclass(64, 5, 400, 0.02, 3).dataset;
  const SelectionResult r = fine_select(ds);
  const Metrics m = compute_prf(r.clean_mask, ds.clean_mask());
  CHECK(m.recall >= 0.99);
}

TEST_CASE("fine_select: default threshold") {
  CHECK(FineOptions{}.zeta == 0.5);
}

TEST_CASE("fine_select: selection invariants") {
  const Dataset ds = noisy_multiclass(32, 4, 200, 0.1, {.kind = NoiseKind::symmetric, .rate = 0.3}, 4);
  FineOptions opts;
  opts.zeta = 0.7;
  const SelectionResult r = fine_select(ds, opts);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(r.clean_mask[i] == (r.clean_prob[i] >= 0.7));
    CHECK(r.clean_prob[i] >= 0.0);
    CHECK(r.clean_prob[i] <= 1.0);
    const auto& u = r.per_class_eigen[ds.observed_labels[i]].u;
    const double p = dot(u, ds.row(i));
    CHECK(std::abs(r.fine_scores[i] - p * p) <= 1e-10);
    // Sign of u is irrelevant bit for bit.
    Vector neg(u);
    for (auto& x : neg) x = -x;
    CHECK(fine_score(neg, ds.row(i)) == fine_score(u, ds.row(i)));
  }
}

TEST_CASE("fine_select: deterministic and thread-count independent") {
  const Dataset ds = noisy_multiclass(32, 6, 150, 0.1, {.kind = NoiseKind::symmetric, .rate = 0.3}, 5);
  FineOptions one;
  one.threads = 1;
  FineOptions many = one;
  many.threads = 4;
  const auto a = fine_select(ds, one);
  const auto b = fine_select(ds, many);
  const auto c = fine_select(ds, one);
  CHECK(a.fine_scores == b.fine_scores);
  CHECK(a.clean_prob == b.clean_prob);
  CHECK(a.clean_mask == b.clean_mask);
  CHECK(a.fine_scores == c.fine_scores);
}

TEST_CASE("fine_select: scale equivariance") {
  const Dataset ds = noisy_multiclass(32, 4, 200, 0.08, {.kind = NoiseKind::symmetric, .rate = 0.25}, 6);
  const SelectionResult base = fine_select(ds);
  for (double c : {0.5, 2.0, 10.0}) {
    Dataset scaled = ds;
    for (auto& f : scaled.features) f *= c;
    const SelectionResult r = fine_select(scaled);
    CHECK(r.clean_mask == base.clean_mask);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      CHECK(r.fine_scores[i] == doctest::Approx(c * c * base.fine_scores[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("fine_select: permutation equivariance") {
  const Dataset ds = noisy_multiclass(32, 4, 200, 0.08, {.kind = NoiseKind::symmetric, .rate = 0.25}, 7);
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 gen(3);
  std::shuffle(order.begin(), order.end(), gen);
  const Dataset shuffled = reorder(ds, order);
  const SelectionResult a = fine_select(ds);
  const SelectionResult b = fine_select(shuffled);
  for (std::size_t j = 0; j < order.size(); ++j) {
    CHECK(b.clean_mask[j] == a.clean_mask[order[j]]);
    CHECK(b.fine_scores[j] == doctest::Approx(a.fine_scores[order[j]]).epsilon(1e-9));
  }
}

TEST_CASE("fine_select: subsampled gram still scores every sample") {
  const Dataset ds = noisy_multiclass(64, 5, 600, 0.05, {.kind = NoiseKind::symmetric, .rate = 0.2}, 8);
  FineOptions opts;
  opts.subsample_fraction = 0.1;
  const SelectionResult r = fine_select(ds, opts);
  CHECK(r.fine_scores.size() == ds.size());
  CHECK(std::count_if(r.fine_scores.begin(), r.fine_scores.end(), [](double s) { return s > 0.0; }) ==
        static_cast<long>(ds.size()));
  CHECK(f_score(r, ds) >= 0.9);
}

TEST_CASE("fine_select: tiny and absent classes are kept whole") {
  Dataset ds = generate_multiclass(8, 3, 20, 0.1, 9).dataset;
  ds.num_classes = 4;  // class 3 is absent
  // Leave a single sample in class 2.
  std::vector<std::size_t> keep;
  bool seen = false;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.observed_labels[i] == 2) {
      if (seen) continue;
      seen = true;
    }
    keep.push_back(i);
  }
  const Dataset trimmed = reorder(ds, keep);
  const SelectionResult r = fine_select(trimmed);
  for (std::size_t i = 0; i < trimmed.size(); ++i) {
    if (trimmed.observed_labels[i] == 2) {
      CHECK(r.clean_mask[i]);
      CHECK(r.clean_prob[i] == 1.0);
    }
  }
  CHECK_FALSE(r.warnings.empty());
  CHECK(r.per_class_eigen[3].gap_degenerate);
}

TEST_CASE("fine_select: identical features in a class are all kept") {
  Dataset ds = generate_multiclass(orthonormal_directions(4, 2, 1), 10, 0.0, 1).dataset;
  const SelectionResult r = fine_select(ds);
  CHECK(r.clean_count() == ds.size());
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("fine_select: errors") {
  Dataset empty;
  empty.dim = 3;
  empty.num_classes = 2;
  try {
    fine_select(empty);
    FAIL("expected EmptyDataset");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDataset);
  }
  const Dataset ds = generate_multiclass(4, 2, 5, 0.1, 1).dataset;
  FineOptions bad;
  bad.subsample_fraction = 0.0;
  CHECK_THROWS_AS(fine_select(ds, bad), Error);
  CHECK_THROWS_AS(fine_iterate(ds, 0), Error);
}

TEST_CASE("fine_select: global GMM scope") {
  const Dataset ds = noisy_multiclass(64, 5, 400, 0.05, {.kind = NoiseKind::symmetric, .rate = 0.2}, 10);
  FineOptions opts;
  opts.gmm_scope = GmmScope::global;
  const SelectionResult r = fine_select(ds, opts);
  CHECK(r.gmm_fits.size() == 1);
  CHECK(r.gmm_fits[0].has_value());
  CHECK(f_score(r, ds) >= 0.9);
}

TEST_CASE("fine_iterate: one round equals fine_select") {
  const Dataset ds = noisy_multiclass(32, 4, 200, 0.1, {.kind = NoiseKind::symmetric, .rate = 0.3}, 11);
  const auto a = fine_select(ds);
  const auto b = fine_iterate(ds, 1);
  CHECK(a.fine_scores == b.fine_scores);
  CHECK(a.clean_prob == b.clean_prob);
  CHECK(a.clean_mask == b.clean_mask);
  CHECK(b.rounds_run == 1);
}

TEST_CASE("fine_iterate: refinement does not hurt under pair-flip noise") {
  int non_decreasing = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset ds = noisy_multiclass(
        128, 10, 1'000, 0.05, {.kind = NoiseKind::asymmetric_pairs, .rate = 0.4, .mapping = cifar10_asymmetric_mapping()},
        100 + seed);
    FineOptions opts;
    opts.seed = seed;
    double prev = -1.0;
    bool ok = true;
    for (int rounds = 1; rounds <= 3; ++rounds) {
      const double f = f_score(fine_iterate(ds, rounds, opts), ds);
      if (f < prev) ok = false;
      prev = f;
    }
    non_decreasing += ok ? 1 : 0;
  }
  CHECK(non_decreasing >= 16);
}

TEST_CASE("fine_iterate: exact recovery with orthogonal classes and no feature noise") {
  Dataset ds = generate_multiclass(orthonormal_directions(16, 8, 2), 50, 0.0, 2).dataset;
  const auto corrupted = inject(ds.observed_labels, {.kind = NoiseKind::symmetric, .rate = 0.3, .num_classes = 8, .seed = 5});
  ds.observed_labels = corrupted.observed_labels;
  for (int rounds = 1; rounds <= 4; ++rounds) {
    const auto r = fine_iterate(ds, rounds);
    CHECK(f_score(r, ds) == 1.0);
    CHECK(r.rounds_run == rounds);
  }
}

TEST_CASE("fine_iterate: prev-clean scope only selects from the previous clean set") {
  const Dataset ds = noisy_multiclass(32, 4, 200, 0.1, {.kind = NoiseKind::symmetric, .rate = 0.3}, 12);
  FineOptions opts;
  opts.score_scope = ScoreScope::prev_clean;
  const auto first = fine_select(ds, opts);
  const auto second = fine_iterate(ds, 2, opts);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!first.clean_mask[i]) {
      CHECK_FALSE(second.clean_mask[i]);
      CHECK(second.clean_prob[i] == 0.0);
    }
  }
  CHECK(second.rounds_run == 2);
}

TEST_CASE("subsample_similarity: full fraction is exact and quality grows with fraction") {
  const Dataset ds = generate_multiclass(64, 4, 2'000, 0.1, 13).dataset;
  const std::vector<double> fractions{0.01, 0.05, 0.2, 1.0};
  const SimilarityTable t = subsample_similarity(ds, fractions, 5);
  REQUIRE(t.rows.size() == 4);
  CHECK(std::abs(t.rows.back().mean_abs_cos - 1.0) <= 1e-10);
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    CHECK(t.rows[i].mean_abs_cos >= t.rows[i - 1].mean_abs_cos - 2.0 * std::max(t.rows[i].std_abs_cos, t.rows[i - 1].std_abs_cos));
  }
  CHECK(t.rows[2].mean_abs_cos >= 0.99);
}

TEST_CASE("subsample_similarity: too-small subsamples are skipped") {
  const Dataset ds = generate_multiclass(16, 3, 20, 0.1, 14).dataset;
  const std::vector<double> fractions{0.05, 1.0};
  const SimilarityTable t = subsample_similarity(ds, fractions, 2);
  CHECK(t.rows[0].cells == 0);
  CHECK(std::isnan(t.rows[0].mean_abs_cos));
  CHECK_FALSE(t.warnings.empty());
  CHECK(t.rows[1].cells == 6);
}
