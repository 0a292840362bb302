#pragma once

#include <cctype>
#include <string>
#include <string_view>

#include "noether/symexpr/normalize.hpp"
#include "noether/symexpr/space.hpp"

namespace noether {

namespace detail {

// Grammar (whitespace insensitive):
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' exponent)?          right associative
//   exponent:= '-' exponent | primary ('^' exponent)?
//   primary := number | identifier | function '(' sum ')' | '(' sum ')'
class Parser {
 public:
  Parser(std::string_view text, const PhaseSpace& space) : text_(text), space_(space) {}

  Expr parse_all() {
    skip_ws();
    if (at_end()) throw ParseError("empty expression", pos_, "expression");
    Expr e = sum();
    skip_ws();
    if (!at_end()) throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_, "operator or end of input");
    return e;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (!at_end() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr sum() {
    std::vector<Expr> terms{product()};
    for (;;) {
      if (accept('+')) {
        terms.push_back(product());
      } else if (accept('-')) {
        terms.push_back(-product());
      } else {
        break;
      }
    }
    return make_add(std::move(terms));
  }

  Expr product() {
    Expr acc = unary();
    for (;;) {
      if (accept('*')) {
        acc = acc * unary();
      } else if (accept('/')) {
        acc = acc / unary();
      } else {
        return acc;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (!accept('^')) return base;
    const std::size_t at = pos_;
    Expr ex = exponent();
    auto k = poly::as_constant(normal_poly(ex));
    if (!k) throw ParseError("exponent must be a rational constant", at);
    return make_pow(base, *k);
  }

  Expr exponent() {
    if (accept('-')) return -exponent();
    Expr base = primary();
    if (!accept('^')) return base;
    const std::size_t at = pos_;
    Expr ex = exponent();
    auto k = poly::as_constant(normal_poly(ex));
    if (!k) throw ParseError("exponent must be a rational constant", at);
    return make_pow(base, *k);
  }

  Expr primary() {
    skip_ws();
    if (at_end()) throw ParseError("unexpected end of input", pos_, "operand");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = sum();
      if (!accept(')')) throw ParseError("unbalanced parenthesis", pos_, "')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError(std::string("unexpected '") + c + "'", pos_, "operand");
  }

  Expr number() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) ++pos_;
    if (!at_end() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    auto r = Rational::from_decimal(text_.substr(start, pos_ - start));
    if (!r) throw ParseError("malformed or out-of-range number", start, "decimal literal");
    return make_num(*r);
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    const std::string name(text_.substr(start, pos_ - start));
    if (auto op = function_op(name)) {
      if (!accept('(')) throw ParseError("function '" + name + "' needs an argument", pos_, "'('");
      Expr arg = sum();
      skip_ws();
      if (!at_end() && text_[pos_] == ',')
        throw ParseError("function '" + name + "' takes exactly one argument", pos_, "')'");
      if (!accept(')')) throw ParseError("unbalanced parenthesis", pos_, "')'");
      return make_func(*op, arg);
    }
    if (auto i = space_.coord_index(name)) {
      check_not_called(name);
      return space_.coord(*i);
    }
    if (auto i = space_.param_index(name)) {
      check_not_called(name);
      return space_.param(*i);
    }
    throw ParseError("unknown identifier '" + name + "'", start);
  }

  void check_not_called(const std::string& name) {
    skip_ws();
    if (!at_end() && text_[pos_] == '(') throw ParseError("'" + name + "' is not a function", pos_);
  }

  static std::optional<Op> function_op(const std::string& s) {
    if (s == "sin") return Op::Sin;
    if (s == "cos") return Op::Cos;
    if (s == "tan") return Op::Tan;
    if (s == "exp") return Op::Exp;
    if (s == "ln") return Op::Ln;
    if (s == "sqrt") return Op::Sqrt;
    return std::nullopt;
  }

  std::string_view text_;
  const PhaseSpace& space_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses infix text over the coordinates and parameters of `space`.
/// Returns the raw tree; unknown identifiers and malformed input throw ParseError.
inline Expr parse(std::string_view text, const PhaseSpace& space) {
  return detail::Parser(text, space).parse_all();
}

}  // namespace noether
