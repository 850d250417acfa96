#pragma once

// Numerical nested commutators and the commutator coefficients that bound the
// local observable error of a splitting step.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "semitrotter/linalg.hpp"
#include "semitrotter/splitting.hpp"

namespace semitrotter {

/// Adjoint chain over {A, B} acting on an implicit innermost O, innermost
/// first: the word (B, A) denotes [A, [B, O]].
using CommWord = std::vector<Generator>;

/// Parses "BA" / "B,A" / "(B, A)" into a CommWord; empty text is the empty word.
CommWord parse_comm_word(std::string_view text);
std::string to_string(const CommWord& w);

/// Left fold of ad over the word; the empty word returns O.
ComplexMatrix nested_comm(const CommWord& word, const ComplexMatrix& a, const ComplexMatrix& b,
                          const ComplexMatrix& o);

/// Bracket expression over the leaves A, B, O such as "[[A,B],O]". Needed for
/// terms like ad_{[A,B]} O that are not a single adjoint chain.
class CommExpr {
 public:
  enum class Leaf { A, B, O };

  static CommExpr leaf(Leaf l);
  static CommExpr bracket(CommExpr lhs, CommExpr rhs);

  /// Throws ParseError with byte offset.
  static CommExpr parse(std::string_view text);

  ComplexMatrix evaluate(const ComplexMatrix& a, const ComplexMatrix& b, const ComplexMatrix& o) const;
  std::string to_string() const;

 private:
  struct Node;
  explicit CommExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

/// Every distinct collapsed chain ad_{H_k}^{q_k} ... ad_{H_1}^{q_1} with
/// q_1 + ... + q_k = p + 1 and H_j in {A, B}. Collapsing adjacent equal letters
/// makes this the set of all words in {A,B}^{p+1}.
std::vector<CommWord> beta_words(int p);

/// max over beta_words(p) of ||ad-chain(O)||_2.
double compute_beta_comm(int p, const ComplexMatrix& a, const ComplexMatrix& b, const ComplexMatrix& o);

/// Multinomial weight of each raw word of length p+1 when the p+1 adjoints
/// are distributed over `plan_len` alternating stages starting with `first`:
/// weight(w) = sum over weak compositions q of p+1 into plan_len parts whose
/// expansion reads w, of (p+1)! / prod q_j!.
std::vector<std::pair<CommWord, double>> alpha_weights(int p, std::size_t plan_len, Generator first);

/// sum_q multinomial(p+1; q) ||ad_{H_l}^{q_l} ... ad_{H_1}^{q_1}(O)||_2 over
/// the alternating stage generators; the larger of the two possible starting
/// generators is returned.
double compute_alpha_comm(int p, std::size_t plan_len, const ComplexMatrix& a, const ComplexMatrix& b,
                          const ComplexMatrix& o);

/// ||ad_H^{p+1}(O)||_2.
double compute_alpha_tilde(int p, const ComplexMatrix& h, const ComplexMatrix& o);

}  // namespace semitrotter
