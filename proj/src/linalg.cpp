#include "fine/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "fine/error.hpp"
#include "fine/random.hpp"

namespace fine {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void GramMatrix::add(std::span<const double> z) {
  if (z.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "feature of dimension " + std::to_string(z.size()) +
                                                  " added to gram of dimension " +
                                                  std::to_string(dim_));
  }
  for (std::size_t i = 0; i < dim_; ++i) {
    const double zi = z[i];
    double* row = data_.data() + i * dim_;
    for (std::size_t j = i; j < dim_; ++j) row[j] += zi * z[j];
  }
  ++count_;
}

void GramMatrix::multiply(std::span<const double> x, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    const double* row = data_.data() + i * dim_;
    double acc = row[i] * x[i];
    const double xi = x[i];
    for (std::size_t j = i + 1; j < dim_; ++j) {
      acc += row[j] * x[j];
      out[j] += row[j] * xi;
    }
    out[i] += acc;
  }
}

double GramMatrix::quadratic_form(std::span<const double> x) const {
  Vector y(dim_);
  multiply(x, y);
  return dot(x, y);
}

GramMatrix accumulate_gram(std::span<const Vector> features) {
  if (features.empty()) throw Error(ErrorCode::EmptyClass, "no features to accumulate");
  GramMatrix gram(features.front().size());
  for (const auto& z : features) gram.add(z);
  return gram;
}

void canonicalize_sign(std::span<double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (!v.empty() && v[best] < 0.0) {
    for (auto& x : v) x = -x;
  }
}

namespace {

struct PowerResult {
  double lambda = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Power iteration on `apply`, starting from (and overwriting) x, which must be
// a unit vector. Stops on a small residual or, if `stall_tol` > 0, when the
// Rayleigh quotient stops moving.
template <typename Apply>
PowerResult power_iterate(Apply&& apply, Vector& x, double tol, double stall_tol, int max_iter) {
  const std::size_t d = x.size();
  Vector y(d);
  PowerResult r;
  double previous = -1.0;
  for (int it = 1; it <= max_iter; ++it) {
    apply(x, y);
    const double lambda = dot(x, y);
    double res2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double e = y[i] - lambda * x[i];
      res2 += e * e;
    }
    r.lambda = lambda;
    r.residual = std::sqrt(res2);
    r.iterations = it;
    const double scale = std::max(std::abs(lambda), 1.0);
    if (r.residual <= tol * scale ||
        (stall_tol > 0.0 && std::abs(lambda - previous) <= stall_tol * scale)) {
      r.converged = true;
      return r;
    }
    previous = lambda;
    const double ny = norm2(y);
    if (ny == 0.0) {
      // x lies in the null space; the dominant eigenvalue is 0.
      r.lambda = 0.0;
      r.converged = true;
      return r;
    }
    for (std::size_t i = 0; i < d; ++i) x[i] = y[i] / ny;
  }
  return r;
}

}  // namespace

EigenPair top_eigenpair(const GramMatrix& gram, const EigenOptions& options, std::uint64_t seed) {
  const std::size_t d = gram.dim();
  if (d == 0) throw Error(ErrorCode::DimensionMismatch, "gram matrix of dimension 0");
  if (!(options.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");

  EigenPair out;
  double max_diag = 0.0;
  for (std::size_t i = 0; i < d; ++i) max_diag = std::max(max_diag, gram(i, i));
  if (max_diag == 0.0) {
    // PSD with zero diagonal means the zero matrix.
    out.u.assign(d, 0.0);
    out.u[0] = 1.0;
    out.gap_degenerate = true;
    return out;
  }

  Rng rng(seed, 0x70'77'65'72);  // "power"
  Vector u = rng.unit_vector(d);
  auto apply = [&](const Vector& x, Vector& y) { gram.multiply(x, y); };
  const PowerResult top = power_iterate(apply, u, options.tol, 0.0, options.max_iter);
  if (!top.converged) throw ConvergenceError(top.residual, top.iterations);
  canonicalize_sign(u);
  out.u = u;
  out.lambda1 = std::max(top.lambda, 0.0);
  out.iterations = top.iterations;

  if (d > 1) {
    // Deflate: (G - lambda1 u u^T) has lambda2 as its dominant eigenvalue.
    Vector x = rng.unit_vector(d);
    const double lambda1 = out.lambda1;
    auto deflated = [&](const Vector& in, Vector& y) {
      gram.multiply(in, y);
      const double c = lambda1 * dot(u, in);
      for (std::size_t i = 0; i < d; ++i) y[i] -= c * u[i];
    };
    const PowerResult second = power_iterate(deflated, x, options.tol, options.tol, options.max_iter);
    out.lambda2 = std::clamp(second.lambda, 0.0, out.lambda1);
  }
  const double gap = (out.lambda1 - out.lambda2) / std::max(out.lambda1, 1e-300);
  out.gap_degenerate = gap < options.degeneracy_threshold;
  return out;
}

double projector_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::DimensionMismatch, "projector_distance on vectors of unequal length");
  }
  if (std::abs(norm2(u) - 1.0) > 1e-6 || std::abs(norm2(v) - 1.0) > 1e-6) {
    throw Error(ErrorCode::NotUnit, "projector_distance requires unit vectors");
  }
  // Equals sqrt(1 - <u,v>^2) for unit vectors; the product form keeps full
  // relative accuracy when u and v are nearly parallel or antiparallel.
  double minus = 0.0;
  double plus = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    minus += (u[i] - v[i]) * (u[i] - v[i]);
    plus += (u[i] + v[i]) * (u[i] + v[i]);
  }
  return std::clamp(0.5 * std::sqrt(minus) * std::sqrt(plus), 0.0, 1.0);
}

}  // namespace fine
