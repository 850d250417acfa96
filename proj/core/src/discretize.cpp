#include "semitrotter/discretize.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "semitrotter/errors.hpp"

namespace semitrotter {

Grid::Grid(double a, double b, std::size_t n) : a_(a), b_(b), n_(n) {
  if (!(std::isfinite(a) && std::isfinite(b) && b > a)) throw InvalidArgument("grid: need finite a < b");
  if (n < 4 || n % 2 != 0) throw InvalidArgument("grid: N must be even and at least 4, got " + std::to_string(n));
}

std::vector<double> Grid::nodes() const {
  std::vector<double> x(n_);
  for (std::size_t j = 0; j < n_; ++j) x[j] = node(j);
  return x;
}

SchemeKind parse_scheme(std::string_view name) {
  if (name == "fd" || name == "finite-difference") return SchemeKind::FiniteDifference;
  if (name == "spectral") return SchemeKind::Spectral;
  throw InvalidArgument("unknown scheme '" + std::string(name) + "'");
}

std::string_view scheme_name(SchemeKind s) { return s == SchemeKind::Spectral ? "spectral" : "fd"; }

ComplexMatrix build_forward_diff(const Grid& g) {
  const std::size_t n = g.size();
  const double s = static_cast<double>(n) / g.length();
  ComplexMatrix d(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    d(j, j) = -s;
    d(j, (j + 1) % n) = s;
  }
  return d;
}

ComplexMatrix build_backward_diff(const Grid& g) { return -build_forward_diff(g).adjoint(); }

ComplexMatrix build_laplacian(const Grid& g) {
  const std::size_t n = g.size();
  const double s = static_cast<double>(n) / g.length();
  // Same floating-point path as the entries of D_B D_F: s*s, and -(s*s) - (s*s).
  const double s2 = s * s;
  ComplexMatrix d(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    d(j, j) = -s2 - s2;
    d(j, (j + 1) % n) = s2;
    d(j, (j + n - 1) % n) = s2;
  }
  return d;
}

ComplexMatrix build_Dk(const Grid& g, std::size_t k, OddDifference odd) {
  if (k == 0) return ComplexMatrix::identity(g.size());
  const ComplexMatrix d2 = build_laplacian(g);
  ComplexMatrix acc;
  if (k % 2 == 1) {
    acc = odd == OddDifference::Forward ? build_forward_diff(g) : build_backward_diff(g);
  } else {
    acc = d2;
  }
  for (std::size_t i = (k % 2 == 1 ? 1 : 2); i < k; i += 2) acc = matmul(acc, d2);
  return acc;
}

ComplexMatrix build_spectral_derivative(const Grid& g, std::size_t k) {
  const std::size_t n = g.size();
  if (k == 0) return ComplexMatrix::identity(n);
  const double base = 2.0 * std::numbers::pi / g.length();
  std::vector<Complex> mult(n);
  for (std::size_t m = 0; m < n; ++m) {
    const long signed_m = m < n / 2 ? static_cast<long>(m) : static_cast<long>(m) - static_cast<long>(n);
    const Complex ixi(0.0, base * static_cast<double>(signed_m));
    mult[m] = std::pow(ixi, static_cast<int>(k));
  }
  if (k % 2 == 1) mult[n / 2] = 0.0;

  // The matrix is circulant: entry (j, l) depends on (j - l) mod N only.
  // Evaluate the first column by direct summation with exact twiddles.
  std::vector<Complex> col(n);
  for (std::size_t r = 0; r < n; ++r) {
    Complex acc(0.0);
    for (std::size_t m = 0; m < n; ++m) {
      const std::size_t phase = (m * r) % n;
      acc += mult[m] * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(phase) / static_cast<double>(n));
    }
    col[r] = acc.real() / static_cast<double>(n);  // multipliers are conjugate-symmetric
  }
  // col[n - r] = (-1)^k col[r] holds exactly; impose it so D is exactly
  // symmetric (even k) or antisymmetric (odd k) despite rounding in the sums.
  const double parity = k % 2 == 0 ? 1.0 : -1.0;
  for (std::size_t r = 1; r < n / 2; ++r) {
    const Complex avg = 0.5 * (col[r] + parity * col[n - r]);
    col[r] = avg;
    col[n - r] = parity * avg;
  }
  if (k % 2 == 1) col[0] = col[n / 2] = 0.0;
  ComplexMatrix d(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t l = 0; l < n; ++l) d(j, l) = col[(j + n - l) % n];
  return d;
}

std::vector<double> sample(const Grid& g, const Expr& f) {
  std::vector<double> v(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) v[j] = f(g.node(j));
  return v;
}

ComplexMatrix build_diag(const Grid& g, const Expr& f) {
  const auto v = sample(g, f);
  return ComplexMatrix::diagonal(std::span<const double>(v));
}

}  // namespace semitrotter
