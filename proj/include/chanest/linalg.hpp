#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "chanest/channel.hpp"
#include "chanest/errors.hpp"

namespace chanest {

/// Dense Hermitian matrix, row-major. Entries satisfy a(i,j) = conj(a(j,i))
/// with a real diagonal.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  static HermitianMatrix identity(std::size_t order) {
    HermitianMatrix m(order);
    for (std::size_t i = 0; i < order; ++i) m(i, i) = 1.0;
    return m;
  }

  /// Validates the Hermitian property exactly.
  static HermitianMatrix from_entries(std::size_t order, std::vector<cplx> entries) {
    if (entries.size() != order * order) throw ArgumentError("hermitian: entry count != order^2");
    HermitianMatrix m(order);
    m.entries_ = std::move(entries);
    for (std::size_t i = 0; i < order; ++i) {
      if (m(i, i).imag() != 0.0) throw ArgumentError("hermitian: diagonal must be real");
      for (std::size_t j = i + 1; j < order; ++j)
        if (m(i, j) != std::conj(m(j, i))) throw ArgumentError("hermitian: a(i,j) != conj(a(j,i))");
    }
    return m;
  }

  /// Symmetric Toeplitz matrix with entry (i,j) = column[|i-j|].
  static HermitianMatrix toeplitz(std::span<const double> column) {
    const std::size_t n = column.size();
    HermitianMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = column[i > j ? i - j : j - i];
    return m;
  }

  std::size_t order() const noexcept { return order_; }
  cplx& operator()(std::size_t i, std::size_t j) { return entries_[i * order_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return entries_[i * order_ + j]; }
  std::span<const cplx> entries() const noexcept { return entries_; }

  ComplexSeq multiply(std::span<const cplx> x) const {
    if (x.size() != order_) throw ArgumentError("hermitian multiply: size mismatch");
    ComplexSeq y(order_);
    for (std::size_t i = 0; i < order_; ++i) {
      cplx acc{0.0, 0.0};
      const cplx* row = entries_.data() + i * order_;
      for (std::size_t j = 0; j < order_; ++j) acc += row[j] * x[j];
      y[i] = acc;
    }
    return y;
  }

 private:
  explicit HermitianMatrix(std::size_t order) : order_(order), entries_(order * order, cplx{0.0, 0.0}) {}

  std::size_t order_ = 0;
  std::vector<cplx> entries_;
};

/// Lower Cholesky factor of A + loading*I.
class CholeskyFactor {
 public:
  CholeskyFactor(const HermitianMatrix& a, double diagonal_loading = 0.0) : n_(a.order()), l_(n_ * n_) {
    for (std::size_t j = 0; j < n_; ++j) {
      const cplx* lj = l_.data() + j * n_;
      double diag = a(j, j).real() + diagonal_loading;
      for (std::size_t k = 0; k < j; ++k) diag -= std::norm(lj[k]);
      if (!(diag > 0.0) || !std::isfinite(diag))
        throw NumericalError("cholesky: matrix not positive definite at pivot " + std::to_string(j) +
                             " (pivot value " + std::to_string(diag) + ")");
      const double root = std::sqrt(diag);
      l_[j * n_ + j] = root;
      for (std::size_t i = j + 1; i < n_; ++i) {
        const cplx* li = l_.data() + i * n_;
        cplx acc = a(i, j);
        for (std::size_t k = 0; k < j; ++k) acc -= li[k] * std::conj(lj[k]);
        l_[i * n_ + j] = acc / root;
      }
    }
  }

  std::size_t order() const noexcept { return n_; }

  /// Solves (A + loading*I) x = b.
  ComplexSeq solve(std::span<const cplx> b) const {
    if (b.size() != n_) throw ArgumentError("cholesky solve: size mismatch");
    ComplexSeq x(b.begin(), b.end());
    for (std::size_t i = 0; i < n_; ++i) {
      const cplx* li = l_.data() + i * n_;
      cplx acc = x[i];
      for (std::size_t k = 0; k < i; ++k) acc -= li[k] * x[k];
      x[i] = acc / li[i];
    }
    for (std::size_t i = n_; i-- > 0;) {
      cplx acc = x[i];
      for (std::size_t k = i + 1; k < n_; ++k) acc -= std::conj(l_[k * n_ + i]) * x[k];
      x[i] = acc / l_[i * n_ + i].real();
    }
    return x;
  }

 private:
  std::size_t n_;
  std::vector<cplx> l_;
};

/// Direct Hermitian solve through a Cholesky factorization. Throws
/// NumericalError when A + loading*I is not positive definite.
inline ComplexSeq solve_hermitian(const HermitianMatrix& a, std::span<const cplx> b,
                                  double diagonal_loading = 0.0) {
  if (b.size() != a.order()) throw ArgumentError("solve_hermitian: size mismatch");
  return CholeskyFactor(a, diagonal_loading).solve(b);
}

/// Levinson recursion for T x = b, T symmetric positive definite Toeplitz
/// with first column `column`. O(n^2); used for sequences too long for a
/// dense factorization.
inline ComplexSeq solve_symmetric_toeplitz(std::span<const double> column, std::span<const cplx> b) {
  const std::size_t n = column.size();
  if (b.size() != n || n == 0) throw ArgumentError("toeplitz solve: size mismatch");
  const double t0 = column[0];
  if (!(t0 > 0.0)) throw NumericalError("toeplitz solve: non-positive diagonal");
  std::vector<double> r(n > 1 ? n - 1 : 0);
  for (std::size_t i = 0; i + 1 < n; ++i) r[i] = column[i + 1] / t0;

  ComplexSeq x(n);
  std::vector<double> y(n);
  std::vector<double> z(n);
  ComplexSeq v(n);
  x[0] = b[0] / t0;
  if (n == 1) return x;
  y[0] = -r[0];
  double beta = 1.0;
  double alpha = -r[0];
  for (std::size_t k = 1; k < n; ++k) {
    beta *= (1.0 - alpha * alpha);
    if (!(beta > 0.0)) throw NumericalError("toeplitz solve: matrix not positive definite");
    cplx dot{0.0, 0.0};
    for (std::size_t i = 0; i < k; ++i) dot += r[i] * x[k - 1 - i];
    const cplx mu = (b[k] / t0 - dot) / beta;
    for (std::size_t i = 0; i < k; ++i) v[i] = x[i] + mu * y[k - 1 - i];
    for (std::size_t i = 0; i < k; ++i) x[i] = v[i];
    x[k] = mu;
    if (k < n - 1) {
      double ydot = 0.0;
      for (std::size_t i = 0; i < k; ++i) ydot += r[i] * y[k - 1 - i];
      alpha = (-r[k] - ydot) / beta;
      for (std::size_t i = 0; i < k; ++i) z[i] = y[i] + alpha * y[k - 1 - i];
      for (std::size_t i = 0; i < k; ++i) y[i] = z[i];
      y[k] = alpha;
    }
  }
  return x;
}

}  // namespace chanest
