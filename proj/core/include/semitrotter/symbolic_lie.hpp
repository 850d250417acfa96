#pragma once

// Exact symbolic algebra over operators sum_k y_k(x) h^{m_k} d^{d_k}, where
// the coefficients y_k are formal products of derivatives of opaque base
// functions (V, y, ...). Commutators are expanded with the Leibniz rule
//   d^d o g = sum_{r=0}^{d} C(d, r) g^{(r)} d^{d-r}
// so cancellations are structural and exact.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semitrotter/discretize.hpp"
#include "semitrotter/linalg.hpp"
#include "semitrotter/splitting.hpp"

namespace semitrotter {

using Rational = boost::multiprecision::cpp_rational;

/// Multiset of derivative-tagged base symbols: (base, derivative order) ->
/// multiplicity. The empty monomial is the constant 1.
using Monomial = std::map<std::pair<std::string, int>, int>;

/// Rational scalar times a formal product of base-symbol derivatives.
struct CoeffSymbol {
  Rational scalar;
  Monomial factors;
};

struct SymTerm {
  CoeffSymbol coeff;
  int hpow;  ///< power of h
  int dord;  ///< order of d/dx
};

/// Element of the operator algebra. Terms with identical (monomial, hpow,
/// dord) are combined and zero terms are dropped, so equality is structural.
class SymOp {
 public:
  SymOp() = default;

  /// scalar * base^{(0)} * h^hpow * d^dord; an empty base gives the constant 1.
  static SymOp monomial(const Rational& scalar, const std::string& base, int hpow, int dord);
  static SymOp from_term(const SymTerm& t);

  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  std::vector<SymTerm> terms() const;

  /// Operator composition P o Q (apply Q first).
  friend SymOp compose(const SymOp& p, const SymOp& q);

  SymOp& operator+=(const SymOp& o);
  SymOp& operator-=(const SymOp& o);
  SymOp& operator*=(const Rational& s);
  friend SymOp operator+(SymOp a, const SymOp& b) { return a += b; }
  friend SymOp operator-(SymOp a, const SymOp& b) { return a -= b; }
  friend SymOp operator*(SymOp a, const Rational& s) { return a *= s; }

  friend bool operator==(const SymOp&, const SymOp&) = default;

  void add_term(const Rational& scalar, const Monomial& m, int hpow, int dord);

 private:
  struct Key {
    int dord;
    int hpow;
    Monomial factors;
    friend auto operator<=>(const Key&, const Key&) = default;
  };
  std::map<Key, Rational> terms_;
};

/// [P, Q] = P o Q - Q o P.
SymOp sym_commutator(const SymOp& p, const SymOp& q);

/// Max derivative order over nonzero terms; 0 for the zero operator.
int height(const SymOp& p);

/// Min h-power over nonzero terms; nullopt stands for +infinity (zero operator).
std::optional<int> width(const SymOp& p);

/// h d^2 (kinetic generator).
SymOp a_sym();
/// h^{-1} V (potential generator).
SymOp b_sym();
/// y h^q d^q.
SymOp observable_sym(int q, const std::string& base = "y");

/// C_n = [U_n, [U_{n-1}, ..., [U_2, U_1]]] with word = (U_1, ..., U_n).
SymOp grade_n_commutator(const std::vector<Generator>& word);

/// One term per line, `q * V^(a)·y^(b) * h^m * d^d`, sorted by (d desc,
/// m asc); "0" for the zero operator.
std::string to_string(const SymOp& p);

struct HeightWidthReport {
  std::size_t trials = 0;
  std::size_t pair_checks = 0;
  std::size_t single_layer_checks = 0;
  std::size_t nested_checks = 0;
  std::size_t height_reduction_failures = 0;
  std::size_t width_expansion_failures = 0;
  std::size_t single_layer_failures = 0;
  std::size_t nested_failures = 0;
  std::optional<std::string> first_counterexample;

  std::size_t total_failures() const {
    return height_reduction_failures + width_expansion_failures + single_layer_failures + nested_failures;
  }
};

/// Randomised check of the height/width calculus:
///   * pairs of random operators (d <= 4, |m| <= 3, <= 4 terms):
///       ht([P,Q]) <= ht(P) + ht(Q) - 1 whenever [P,Q] != 0,
///       wd([P,Q]) >= wd(P) + wd(Q);
///   * single layers [C_n, O_q] (n <= 4, q <= 3): ht <= wd, plus the
///     grade-n bounds ht(C_n) <= 2m - (n-1), wd(C_n) >= 2m - n;
///   * nested W_k = [C_{n_k}, ..., [C_{n_1}, O_q]] (k <= 3): ht <= wd.
/// Failures are counted, never thrown.
HeightWidthReport verify_height_width(std::size_t trials, std::uint64_t seed);

/// Least-squares slope of log ||P(N)||_2 against log N on [a, b). Returns
/// -infinity when every operator is zero. Needs at least three sizes.
double discrete_height_estimate(const std::function<ComplexMatrix(const Grid&)>& builder,
                                const std::vector<std::size_t>& sizes, double a, double b);

}  // namespace semitrotter
