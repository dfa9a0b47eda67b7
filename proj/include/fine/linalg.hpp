#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fine {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// Uncentered second-moment matrix sum_i z_i z_i^T over a set of features.
///
/// Only the upper triangle is accumulated; the lower triangle is mirrored on
/// read, so the matrix is exactly symmetric regardless of summation order.
class GramMatrix {
 public:
  GramMatrix() = default;
  explicit GramMatrix(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) {}

  /// Adds z z^T. Throws DimensionMismatch if z.size() != dim().
  void add(std::span<const double> z);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return count_; }

  double operator()(std::size_t i, std::size_t j) const {
    return i <= j ? data_[i * dim_ + j] : data_[j * dim_ + i];
  }

  /// out = G x.
  void multiply(std::span<const double> x, std::span<double> out) const;

  /// x^T G x.
  double quadratic_form(std::span<const double> x) const;

 private:
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::vector<double> data_;  // row-major; only j >= i is meaningful
};

/// Sums z z^T in ascending index order. Throws EmptyClass on an empty
/// sequence and DimensionMismatch on ragged input.
GramMatrix accumulate_gram(std::span<const Vector> features);

struct EigenPair {
  Vector u;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  bool gap_degenerate = false;
  int iterations = 0;
};

struct EigenOptions {
  double tol = 1e-10;
  int max_iter = 10'000;
  double degeneracy_threshold = 1e-6;
};

/// Dominant eigenpair of a PSD gram matrix by power iteration, plus lambda2
/// from one deflation step.
///
/// The start vector is drawn from `seed`. Converges when
/// ||G u - lambda1 u|| <= tol * max(lambda1, 1); throws ConvergenceError
/// otherwise. The sign of u is fixed so its largest-magnitude entry is
/// positive. A zero matrix yields lambda1 = 0, u = e1 and gap_degenerate.
EigenPair top_eigenpair(const GramMatrix& gram, const EigenOptions& options, std::uint64_t seed);

inline EigenPair top_eigenpair(const GramMatrix& gram, std::uint64_t seed = 0) {
  return top_eigenpair(gram, EigenOptions{}, seed);
}

/// ||u u^T - v v^T||_2 for unit u, v, i.e. |sin angle(u, v)|.
/// Throws NotUnit when either norm is off by more than 1e-6.
double projector_distance(std::span<const double> u, std::span<const double> v);

/// Flips v in place so its largest-magnitude entry (first on ties) is positive.
void canonicalize_sign(std::span<double> v);

}  // namespace fine
