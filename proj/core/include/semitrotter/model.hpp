#pragma once

// Semiclassical Hamiltonian pieces and polynomial observables.
//
//   A = -kinetic_coeff * h * d^2/dx^2      (discretised)
//   B = V(x) / h
//   H = A + B
//   O = sum_m y_m(x) h^m d^m/dx^m

#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

#include "semitrotter/discretize.hpp"
#include "semitrotter/expr.hpp"
#include "semitrotter/linalg.hpp"

namespace semitrotter {

struct ModelParams {
  double h;
  double kinetic_coeff = 0.5;
  Expr potential;
  Grid grid;
  SchemeKind scheme = SchemeKind::FiniteDifference;

  /// Throws InvalidArgument unless 0 < h <= 1 and kinetic_coeff > 0.
  void validate() const;
};

struct ObservableTerm {
  std::size_t degree;
  Expr coeff;
};

struct PolyObservableSpec {
  std::vector<ObservableTerm> terms;
  double h;
  OddDifference odd = OddDifference::Forward;
  /// Replace O by (O + O^dagger) / 2.
  bool symmetrize = false;

  /// Throws InvalidArgument on duplicate degrees or an empty term list.
  void validate() const;
};

/// Parses "0: cos(x); 1: sin(x)" into terms (degree: expression, `;`-separated).
std::vector<ObservableTerm> parse_observable_terms(std::string_view text);

/// The default observable cos(x) + sin(x) h d/dx.
std::vector<ObservableTerm> default_observable_terms();

ComplexMatrix build_A(const ModelParams& p);
ComplexMatrix build_B(const ModelParams& p);
ComplexMatrix build_H(const ModelParams& p);
ComplexMatrix build_observable(const PolyObservableSpec& spec, const Grid& g, SchemeKind scheme);

}  // namespace semitrotter
