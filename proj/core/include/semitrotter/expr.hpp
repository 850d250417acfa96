#pragma once

// Scalar expressions of one real variable `x`, used for potentials V(x) and
// observable coefficients y_m(x).
//
// Grammar (lowest to highest precedence):
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right-associative
//   primary := number | 'x' | 'pi' | func '(' sum ')' | '(' sum ')'
//   func    := sin | cos | exp | tanh
//
// So `-x^2` is `-(x^2)` and `2^-1` is `0.5`.

#include <memory>
#include <string>
#include <string_view>
#include <variant>

namespace semitrotter {

enum class UnaryFn { Sin, Cos, Exp, Tanh };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct ExprNode;

/// Immutable expression tree. Copies share nodes, so values are cheap to pass
/// around and safe to evaluate concurrently.
class Expr {
 public:
  static Expr literal(double v);
  static Expr variable();
  static Expr pi();
  static Expr negate(Expr e);
  static Expr call(UnaryFn fn, Expr arg);
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs);

  const ExprNode& node() const { return *node_; }

  /// Throws EvalError on division by zero, 0^negative or a non-finite result.
  double operator()(double x) const;

  /// Fully parenthesised rendering that parses back to an equivalent tree.
  std::string to_string() const;

 private:
  explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const ExprNode> node_;
};

namespace expr_node {
struct Literal {
  double value;
};
struct Variable {};
struct Pi {};
struct Negate {
  Expr operand;
};
struct Call {
  UnaryFn fn;
  Expr arg;
};
struct Binary {
  BinaryOp op;
  Expr lhs;
  Expr rhs;
};
}  // namespace expr_node

struct ExprNode {
  std::variant<expr_node::Literal, expr_node::Variable, expr_node::Pi,
               expr_node::Negate, expr_node::Call, expr_node::Binary>
      value;
};

/// Throws ParseError (with byte offset) on malformed or empty input.
Expr parse_expr(std::string_view source);

inline double eval_expr(const Expr& e, double x) { return e(x); }

}  // namespace semitrotter
