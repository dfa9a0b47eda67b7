#include "fine/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fine/error.hpp"
#include "fine/random.hpp"

namespace fine {
namespace {

enum Stream : std::uint64_t { kDirections = 1, kNoise = 2 };

// Removes the components of x along each unit vector in `basis`, twice for
// stability, and normalizes. Returns false if x collapses.
bool orthonormalize(Vector& x, const std::vector<Vector>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) {
      const double c = dot(x, b);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] -= c * b[i];
    }
  }
  const double n = norm2(x);
  if (n < 1e-8) return false;
  for (auto& xi : x) xi /= n;
  return true;
}

void append_sample(std::vector<double>& out, const Vector& mean, double sigma, Rng& rng) {
  for (double m : mean) out.push_back(sigma == 0.0 ? m : m + sigma * rng.normal());
}

}  // namespace

Dataset SyntheticDataset::to_dataset() const {
  Dataset ds;
  ds.dim = spec.d;
  ds.num_classes = 2;
  ds.features = features;
  ds.observed_labels.assign(size(), 0);
  ds.true_labels.emplace(size());
  for (std::size_t i = 0; i < size(); ++i) (*ds.true_labels)[i] = true_mask[i] ? 0 : 1;
  return ds;
}

SyntheticDataset generate_lda(const SyntheticSpec& spec) {
  if (spec.n_clean == 0) throw Error(ErrorCode::InvalidSpec, "n_clean must be at least 1");
  if (spec.d < 2) throw Error(ErrorCode::InvalidSpec, "d must be at least 2");
  if (!std::isfinite(spec.theta) || spec.theta < 0.0 || spec.theta > std::numbers::pi / 2 + 1e-12) {
    throw Error(ErrorCode::InvalidSpec, "theta must lie in [0, pi/2]");
  }
  if (!std::isfinite(spec.sigma) || spec.sigma < 0.0) throw Error(ErrorCode::InvalidSpec, "sigma must be >= 0");

  SyntheticDataset out;
  out.spec = spec;

  Rng dir_rng(spec.seed, kDirections);
  out.v = dir_rng.unit_vector(spec.d);
  Vector perp;
  do {
    perp = dir_rng.unit_vector(spec.d);
  } while (!orthonormalize(perp, {out.v}));
  out.w.resize(spec.d);
  const double c = std::cos(spec.theta);
  const double s = std::sin(spec.theta);
  for (std::size_t i = 0; i < spec.d; ++i) out.w[i] = c * out.v[i] + s * perp[i];

  const std::size_t n = spec.n_clean + spec.n_noisy;
  out.features.reserve(n * spec.d);
  out.true_mask.reserve(n);
  Rng noise(spec.seed, kNoise);
  for (std::size_t i = 0; i < spec.n_clean; ++i) {
    append_sample(out.features, out.v, spec.sigma, noise);
    out.true_mask.push_back(true);
  }
  for (std::size_t i = 0; i < spec.n_noisy; ++i) {
    append_sample(out.features, out.w, spec.sigma, noise);
    out.true_mask.push_back(false);
  }
  return out;
}

MulticlassDataset generate_multiclass(std::vector<Vector> directions, std::size_t per_class_n, double sigma,
                                      std::uint64_t seed) {
  const std::size_t k = directions.size();
  if (k < 2) throw Error(ErrorCode::InvalidSpec, "multiclass generation needs K >= 2");
  if (per_class_n < 1) throw Error(ErrorCode::InvalidSpec, "per_class_n must be at least 1");
  if (!std::isfinite(sigma) || sigma < 0.0) throw Error(ErrorCode::InvalidSpec, "sigma must be >= 0");
  const std::size_t d = directions.front().size();
  for (const auto& v : directions) {
    if (v.size() != d) throw Error(ErrorCode::DimensionMismatch, "class directions differ in dimension");
  }

  MulticlassDataset out;
  Dataset& ds = out.dataset;
  ds.dim = d;
  ds.num_classes = k;
  ds.features.reserve(k * per_class_n * d);
  ds.observed_labels.reserve(k * per_class_n);
  // Each class draws from its own stream so classes can be generated independently.
  for (std::size_t c = 0; c < k; ++c) {
    Rng noise(seed, kNoise + 16 * (c + 1));
    for (std::size_t i = 0; i < per_class_n; ++i) {
      append_sample(ds.features, directions[c], sigma, noise);
      ds.observed_labels.push_back(static_cast<Label>(c));
    }
  }
  ds.true_labels = ds.observed_labels;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) out.pairwise_cos.push_back(dot(directions[i], directions[j]));
  }
  out.directions = std::move(directions);
  return out;
}

MulticlassDataset generate_multiclass(std::size_t d, std::size_t k, std::size_t per_class_n, double sigma,
                                      std::uint64_t seed) {
  if (d < 1) throw Error(ErrorCode::InvalidSpec, "d must be at least 1");
  if (k < 2) throw Error(ErrorCode::InvalidSpec, "multiclass generation needs K >= 2");
  Rng dir_rng(seed, kDirections);
  std::vector<Vector> directions;
  directions.reserve(k);
  for (std::size_t c = 0; c < k; ++c) directions.push_back(dir_rng.unit_vector(d));
  return generate_multiclass(std::move(directions), per_class_n, sigma, seed);
}

std::vector<Vector> orthonormal_directions(std::size_t d, std::size_t k, std::uint64_t seed) {
  if (k > d) throw Error(ErrorCode::InvalidSpec, "cannot place " + std::to_string(k) + " orthonormal vectors in R^" +
                                                     std::to_string(d));
  Rng rng(seed, kDirections);
  std::vector<Vector> basis;
  while (basis.size() < k) {
    Vector x = rng.unit_vector(d);
    if (orthonormalize(x, basis)) basis.push_back(std::move(x));
  }
  return basis;
}

}  // namespace fine
