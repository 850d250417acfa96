#pragma once

// Dense complex matrix kernel.

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace semitrotter {

using Complex = std::complex<double>;

/// Dense row-major complex matrix.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix diagonal(std::span<const Complex> diag);
  static ComplexMatrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }

  Complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<Complex> data() noexcept { return data_; }
  std::span<const Complex> data() const noexcept { return data_; }
  std::span<Complex> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Complex> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  ComplexMatrix adjoint() const;

  /// Largest entry modulus.
  double max_abs() const;

  /// True when every off-diagonal entry is exactly zero.
  bool is_diagonal() const;

  ComplexMatrix& operator+=(const ComplexMatrix& o);
  ComplexMatrix& operator-=(const ComplexMatrix& o);
  ComplexMatrix& operator*=(Complex s);

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
  friend ComplexMatrix operator*(ComplexMatrix a, Complex s) { return a *= s; }
  friend ComplexMatrix operator*(Complex s, ComplexMatrix a) { return a *= s; }
  friend ComplexMatrix operator-(ComplexMatrix a) { return a *= Complex(-1.0); }

  friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> data_;
};

/// X * Y. Throws DimensionError if inner dimensions disagree.
ComplexMatrix matmul(const ComplexMatrix& x, const ComplexMatrix& y);

/// X^dagger * Y without forming the adjoint.
ComplexMatrix adjoint_matmul(const ComplexMatrix& x, const ComplexMatrix& y);

/// XY - YX.
ComplexMatrix commutator(const ComplexMatrix& x, const ComplexMatrix& y);

/// Max-entry Hermiticity defect relative to the largest entry.
double hermiticity_defect(const ComplexMatrix& m);

struct HermitianEigen {
  std::vector<double> values;  ///< ascending
  ComplexMatrix vectors;       ///< columns are orthonormal eigenvectors
};

/// M = V diag(values) V^dagger via Householder tridiagonalisation followed by
/// implicit QL. Throws InvalidArgument for non-Hermitian input and
/// ConvergenceError if QL stalls.
HermitianEigen hermitian_eig(const ComplexMatrix& m);

/// Eigenvalues only (ascending); skips the eigenvector accumulation.
std::vector<double> hermitian_eigenvalues(const ComplexMatrix& m);

/// exp(-i theta M) for Hermitian M.
ComplexMatrix unitary_exp(const ComplexMatrix& m, double theta);

/// exp(-i theta M) from a precomputed eigendecomposition.
ComplexMatrix unitary_exp(const HermitianEigen& eig, double theta);

struct SpectralNormOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 20000;
  /// Matrices up to this size fall back to the dense route when Lanczos
  /// does not converge.
  std::size_t dense_fallback_limit = 1024;
};

/// Largest singular value. Lanczos (Krylov-accelerated power iteration) on
/// M^dagger M with a residual stopping test, a dense eigenvalue fallback up to
/// dense_fallback_limit, and ConvergenceError beyond it.
double spectral_norm(const ComplexMatrix& m, const SpectralNormOptions& opts = {});

/// Largest singular value from the dense eigenvalues of M^dagger M.
double spectral_norm_dense(const ComplexMatrix& m);

/// ||U^dagger U - I||_2.
double unitarity_defect(const ComplexMatrix& u);

/// Eigenvalues lambda_m = sum_r c_r omega^{rm} (omega = e^{2 pi i / N}) of the
/// circulant with first row `c`, in standard DFT order.
std::vector<Complex> circulant_eigenvalues(std::span<const Complex> first_row);

/// Dense circulant matrix C(j, k) = c[(k - j) mod N].
ComplexMatrix circulant_from_row(std::span<const Complex> first_row);

/// First row if `m` is circulant to within `rel_tol * max_abs(m)`.
std::optional<std::vector<Complex>> circulant_first_row(const ComplexMatrix& m, double rel_tol = 1e-12);

/// exp(-i theta C) for the Hermitian circulant C with the given first row,
/// computed through its DFT diagonalisation.
ComplexMatrix circulant_exp(std::span<const Complex> first_row, double theta);

/// In-place X <- F^{-1} diag(multipliers) F X, F the unitary-scaled DFT acting
/// on columns. Applies a circulant (given by its eigenvalues) from the left in
/// O(N^2 log N).
void apply_circulant_left(std::span<const Complex> eigenvalues, ComplexMatrix& x);

/// In-place X <- diag(d) X.
void apply_diagonal_left(std::span<const Complex> d, ComplexMatrix& x);

}  // namespace semitrotter
