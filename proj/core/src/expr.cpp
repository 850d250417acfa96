#include "semitrotter/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "semitrotter/errors.hpp"

namespace semitrotter {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

const char* fn_name(UnaryFn fn) {
  switch (fn) {
    case UnaryFn::Sin: return "sin";
    case UnaryFn::Cos: return "cos";
    case UnaryFn::Exp: return "exp";
    case UnaryFn::Tanh: return "tanh";
  }
  return "?";
}

char op_symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return '+';
    case BinaryOp::Sub: return '-';
    case BinaryOp::Mul: return '*';
    case BinaryOp::Div: return '/';
    case BinaryOp::Pow: return '^';
  }
  return '?';
}

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw EvalError(std::string("non-finite result in ") + what);
  return v;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expr parse() {
    skip_ws();
    if (pos_ == src_.size()) throw ParseError("empty expression", pos_);
    Expr e = sum();
    skip_ws();
    if (pos_ != src_.size()) throw ParseError("unexpected character '" + std::string(1, src_[pos_]) + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= src_.size()) throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  Expr sum() {
    Expr lhs = product();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::binary(BinaryOp::Add, lhs, product());
      } else if (accept('-')) {
        lhs = Expr::binary(BinaryOp::Sub, lhs, product());
      } else {
        return lhs;
      }
    }
  }

  Expr product() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::binary(BinaryOp::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = Expr::binary(BinaryOp::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return Expr::negate(unary());
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) return Expr::binary(BinaryOp::Pow, base, unary());
    return base;
  }

  Expr primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = sum();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
  }

  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc() || ptr != src_.data() + pos_) throw ParseError("malformed number", start);
    return Expr::literal(value);
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name == "x") return Expr::variable();
    if (name == "pi") return Expr::pi();
    UnaryFn fn;
    if (name == "sin") {
      fn = UnaryFn::Sin;
    } else if (name == "cos") {
      fn = UnaryFn::Cos;
    } else if (name == "exp") {
      fn = UnaryFn::Exp;
    } else if (name == "tanh") {
      fn = UnaryFn::Tanh;
    } else {
      throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }
    expect('(');
    Expr arg = sum();
    expect(')');
    return Expr::call(fn, arg);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr Expr::literal(double v) { return Expr(std::make_shared<const ExprNode>(ExprNode{expr_node::Literal{v}})); }
Expr Expr::variable() { return Expr(std::make_shared<const ExprNode>(ExprNode{expr_node::Variable{}})); }
Expr Expr::pi() { return Expr(std::make_shared<const ExprNode>(ExprNode{expr_node::Pi{}})); }
Expr Expr::negate(Expr e) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{expr_node::Negate{std::move(e)}}));
}
Expr Expr::call(UnaryFn fn, Expr arg) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{expr_node::Call{fn, std::move(arg)}}));
}
Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{expr_node::Binary{op, std::move(lhs), std::move(rhs)}}));
}

double Expr::operator()(double x) const {
  return std::visit(
      Overloaded{
          [](const expr_node::Literal& n) { return n.value; },
          [x](const expr_node::Variable&) { return x; },
          [](const expr_node::Pi&) { return std::numbers::pi; },
          [x](const expr_node::Negate& n) { return -n.operand(x); },
          [x](const expr_node::Call& n) {
            const double a = n.arg(x);
            switch (n.fn) {
              case UnaryFn::Sin: return std::sin(a);
              case UnaryFn::Cos: return std::cos(a);
              case UnaryFn::Exp: return checked(std::exp(a), "exp");
              case UnaryFn::Tanh: return std::tanh(a);
            }
            return 0.0;
          },
          [x](const expr_node::Binary& n) {
            const double l = n.lhs(x);
            const double r = n.rhs(x);
            switch (n.op) {
              case BinaryOp::Add: return checked(l + r, "addition");
              case BinaryOp::Sub: return checked(l - r, "subtraction");
              case BinaryOp::Mul: return checked(l * r, "multiplication");
              case BinaryOp::Div:
                if (r == 0.0) throw EvalError("division by zero");
                return checked(l / r, "division");
              case BinaryOp::Pow:
                if (l == 0.0 && r < 0.0) throw EvalError("zero raised to a negative power");
                return checked(std::pow(l, r), "power");
            }
            return 0.0;
          },
      },
      node_->value);
}

std::string Expr::to_string() const {
  return std::visit(
      Overloaded{
          [](const expr_node::Literal& n) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            return n.value < 0 ? "(" + std::string(buf) + ")" : std::string(buf);
          },
          [](const expr_node::Variable&) { return std::string("x"); },
          [](const expr_node::Pi&) { return std::string("pi"); },
          [](const expr_node::Negate& n) { return "(-" + n.operand.to_string() + ")"; },
          [](const expr_node::Call& n) { return std::string(fn_name(n.fn)) + "(" + n.arg.to_string() + ")"; },
          [](const expr_node::Binary& n) {
            return "(" + n.lhs.to_string() + " " + op_symbol(n.op) + " " + n.rhs.to_string() + ")";
          },
      },
      node_->value);
}

Expr parse_expr(std::string_view source) { return Parser(source).parse(); }

}  // namespace semitrotter
