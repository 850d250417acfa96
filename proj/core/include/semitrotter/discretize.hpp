#pragma once

// Periodic 1-D grids and the discrete derivative operators built on them.

#include <cstddef>
#include <string_view>
#include <vector>

#include "semitrotter/expr.hpp"
#include "semitrotter/linalg.hpp"

namespace semitrotter {

/// Uniform periodic grid on [a, b) with N nodes x_j = a + (b - a) j / N.
class Grid {
 public:
  /// Throws InvalidArgument unless b > a and N >= 4 is even.
  Grid(double a, double b, std::size_t n);

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  std::size_t size() const noexcept { return n_; }
  double length() const noexcept { return b_ - a_; }
  double spacing() const noexcept { return (b_ - a_) / static_cast<double>(n_); }
  double node(std::size_t j) const noexcept { return a_ + (b_ - a_) * static_cast<double>(j) / static_cast<double>(n_); }
  std::vector<double> nodes() const;

 private:
  double a_;
  double b_;
  std::size_t n_;
};

enum class SchemeKind { FiniteDifference, Spectral };

SchemeKind parse_scheme(std::string_view name);
std::string_view scheme_name(SchemeKind s);

/// D_F: (u_{j+1} - u_j) / dx with periodic wrap.
ComplexMatrix build_forward_diff(const Grid& g);

/// D_B = -D_F^dagger.
ComplexMatrix build_backward_diff(const Grid& g);

/// Periodic (1, -2, 1) / dx^2 stencil; entrywise identical to D_B D_F.
ComplexMatrix build_laplacian(const Grid& g);

/// Which first difference odd powers start from.
enum class OddDifference { Forward, Backward };

/// D_0 = I, D_k = D_2^{k/2} (k even), D_F D_2^{(k-1)/2} (k odd).
ComplexMatrix build_Dk(const Grid& g, std::size_t k, OddDifference odd = OddDifference::Forward);

/// IDFT diag((i xi)^k) DFT with xi = 2 pi / (b - a) * (0, 1, ..., N/2 - 1,
/// -N/2, ..., -1). For odd k the unpaired Nyquist multiplier is zeroed.
ComplexMatrix build_spectral_derivative(const Grid& g, std::size_t k);

/// Samples of f at the nodes.
std::vector<double> sample(const Grid& g, const Expr& f);

/// diag(f(x_0), ..., f(x_{N-1})); propagates EvalError.
ComplexMatrix build_diag(const Grid& g, const Expr& f);

}  // namespace semitrotter
