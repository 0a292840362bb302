#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "noether/errors.hpp"
#include "noether/symexpr/rational.hpp"

namespace noether {

enum class Op : std::uint8_t {
  Num,
  Coord,
  Param,
  Aux,
  Add,
  Mul,
  Pow,
  Sin,
  Cos,
  Tan,
  Exp,
  Ln,
  Sqrt,
};

inline bool is_function(Op op) { return op >= Op::Sin; }

inline const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tan: return "tan";
    case Op::Exp: return "exp";
    case Op::Ln: return "ln";
    case Op::Sqrt: return "sqrt";
    default: return "?";
  }
}

class Expr;

struct Node {
  Op op = Op::Num;
  Rational value;  // Num: the constant; Pow: the exponent
  int index = -1;  // Coord / Param / Aux slot
  int order = 0;   // Coord: ordering key (momenta sort before positions)
  std::string name;
  std::vector<Expr> args;
};

/// Immutable handle to a shared expression tree. Cheap to copy.
class Expr {
 public:
  Expr() : node_(zero_node()) {}
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  const Node& node() const { return *node_; }
  Op op() const { return node_->op; }
  const std::vector<Expr>& args() const { return node_->args; }
  const Expr& arg(std::size_t i = 0) const { return node_->args[i]; }
  const Rational& value() const { return node_->value; }
  const Rational& exponent() const { return node_->value; }
  int index() const { return node_->index; }
  const std::string& name() const { return node_->name; }

  bool is_num() const { return op() == Op::Num; }
  bool is_zero() const { return is_num() && value().is_zero(); }
  bool is_one() const { return is_num() && value().is_one(); }
  bool same_node(const Expr& o) const { return node_ == o.node_; }

 private:
  static const std::shared_ptr<const Node>& zero_node() {
    static const std::shared_ptr<const Node> z = std::make_shared<const Node>();
    return z;
  }
  std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------------------
// Builders. These construct raw trees; call normalize() for canonical form.

inline Expr make_num(Rational r) {
  auto n = std::make_shared<Node>();
  n->op = Op::Num;
  n->value = r;
  return Expr(std::move(n));
}
inline Expr make_num(std::int64_t v) { return make_num(Rational(v)); }

inline Expr make_coord(int index, int order, std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Coord;
  n->index = index;
  n->order = order;
  n->name = std::move(name);
  return Expr(std::move(n));
}

inline Expr make_param(int index, std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Param;
  n->index = index;
  n->name = std::move(name);
  return Expr(std::move(n));
}

/// Auxiliary variable outside the phase space (e.g. the homotopy parameter).
inline Expr make_aux(int index, std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Aux;
  n->index = index;
  n->name = std::move(name);
  return Expr(std::move(n));
}

inline Expr make_nary(Op op, std::vector<Expr> args) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args = std::move(args);
  return Expr(std::move(n));
}

inline Expr make_add(std::vector<Expr> terms) {
  if (terms.empty()) return make_num(0);
  if (terms.size() == 1) return terms.front();
  return make_nary(Op::Add, std::move(terms));
}

inline Expr make_mul(std::vector<Expr> factors) {
  if (factors.empty()) return make_num(1);
  if (factors.size() == 1) return factors.front();
  return make_nary(Op::Mul, std::move(factors));
}

inline Expr make_pow(Expr base, Rational exponent) {
  if (exponent.is_one()) return base;
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->value = exponent;
  n->args = {std::move(base)};
  return Expr(std::move(n));
}

inline Expr make_func(Op op, Expr arg) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args = {std::move(arg)};
  return Expr(std::move(n));
}

inline Expr operator+(const Expr& a, const Expr& b) { return make_add({a, b}); }
inline Expr operator*(const Expr& a, const Expr& b) { return make_mul({a, b}); }
inline Expr operator-(const Expr& a) { return make_mul({make_num(-1), a}); }
inline Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }
inline Expr operator/(const Expr& a, const Expr& b) { return a * make_pow(b, Rational(-1)); }
inline Expr operator*(const Rational& c, const Expr& a) { return make_num(c) * a; }
inline Expr sin(const Expr& a) { return make_func(Op::Sin, a); }
inline Expr cos(const Expr& a) { return make_func(Op::Cos, a); }
inline Expr tan(const Expr& a) { return make_func(Op::Tan, a); }
inline Expr exp(const Expr& a) { return make_func(Op::Exp, a); }
inline Expr ln(const Expr& a) { return make_func(Op::Ln, a); }
inline Expr sqrt(const Expr& a) { return make_func(Op::Sqrt, a); }

// ---------------------------------------------------------------------------
// Structural order. Atoms sort coordinates first, then parameters, then the
// rest; this order drives canonical term order and printing.

inline int op_rank(Op op) {
  switch (op) {
    case Op::Coord: return 0;
    case Op::Param: return 1;
    case Op::Aux: return 2;
    case Op::Num: return 3;
    case Op::Sin: return 4;
    case Op::Cos: return 5;
    case Op::Tan: return 6;
    case Op::Exp: return 7;
    case Op::Ln: return 8;
    case Op::Sqrt: return 9;
    case Op::Pow: return 10;
    case Op::Mul: return 11;
    case Op::Add: return 12;
  }
  return 13;
}

inline int compare(const Expr& a, const Expr& b) {
  if (a.same_node(b)) return 0;
  const int ra = op_rank(a.op()), rb = op_rank(b.op());
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (a.op()) {
    case Op::Num: return compare(a.value(), b.value());
    case Op::Coord:
      if (a.node().order != b.node().order) return a.node().order < b.node().order ? -1 : 1;
      return a.name().compare(b.name()) < 0 ? -1 : (a.name() == b.name() ? 0 : 1);
    case Op::Param:
    case Op::Aux:
      if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
      return a.name().compare(b.name()) < 0 ? -1 : (a.name() == b.name() ? 0 : 1);
    case Op::Pow: {
      const int c = compare(a.arg(), b.arg());
      if (c != 0) return c;
      return compare(a.exponent(), b.exponent());
    }
    default: {
      const auto& x = a.args();
      const auto& y = b.args();
      for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        const int c = compare(x[i], y[i]);
        if (c != 0) return c;
      }
      if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
      return 0;
    }
  }
}

inline bool operator==(const Expr& a, const Expr& b) { return compare(a, b) == 0; }

struct ExprLess {
  bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

// ---------------------------------------------------------------------------
// Structural queries

/// True if `e` mentions coordinate `index` anywhere.
inline bool depends_on_coord(const Expr& e, int index) {
  if (e.op() == Op::Coord) return e.index() == index;
  for (const auto& a : e.args())
    if (depends_on_coord(a, index)) return true;
  return false;
}

inline bool depends_on_aux(const Expr& e, int index) {
  if (e.op() == Op::Aux) return e.index() == index;
  for (const auto& a : e.args())
    if (depends_on_aux(a, index)) return true;
  return false;
}

inline bool has_coords(const Expr& e) {
  if (e.op() == Op::Coord) return true;
  for (const auto& a : e.args())
    if (has_coords(a)) return true;
  return false;
}

inline std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  for (const auto& a : e.args()) n += node_count(a);
  return n;
}

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline int print_rank(const Expr& e) {
  // factor order inside a printed product: params, coords, everything else
  switch (e.op()) {
    case Op::Param: return 0;
    case Op::Coord: return 1;
    case Op::Pow: return print_rank(e.arg());
    default: return 2;
  }
}

inline constexpr int kPrecSum = 1;
inline constexpr int kPrecProduct = 2;
inline constexpr int kPrecPower = 4;
inline constexpr int kPrecAtom = 5;

std::string print(const Expr& e, int parent_prec);

inline std::string paren(const std::string& s, bool wrap) { return wrap ? "(" + s + ")" : s; }

inline std::string print_exponent(const Rational& r) {
  if (r.is_integer() && !r.is_negative()) return r.to_string();
  return "(" + r.to_string() + ")";
}

/// Prints a product split into numerator/denominator, with sign handled by
/// the caller. Returns the text and whether it carried an explicit leading minus.
inline std::string print_product(const Expr& e, int parent_prec, bool& negative) {
  Rational coeff(1);
  std::vector<Expr> num, den;
  auto collect = [&](const Expr& f) {
    if (f.op() == Op::Num) {
      coeff *= f.value();
    } else if (f.op() == Op::Pow && f.exponent().is_negative()) {
      den.push_back(make_pow(f.arg(), -f.exponent()));
    } else {
      num.push_back(f);
    }
  };
  if (e.op() == Op::Mul) {
    for (const auto& f : e.args()) collect(f);
  } else {
    collect(e);
  }
  negative = coeff.is_negative();
  coeff = coeff.abs();
  std::stable_sort(num.begin(), num.end(),
                   [](const Expr& a, const Expr& b) { return print_rank(a) < print_rank(b); });
  std::stable_sort(den.begin(), den.end(),
                   [](const Expr& a, const Expr& b) { return print_rank(a) < print_rank(b); });

  std::string out;
  auto append = [&out](const std::string& s) {
    if (!out.empty()) out += "*";
    out += s;
  };
  if (!coeff.is_one() || num.empty()) {
    if (coeff.is_integer() || (num.empty() && den.empty())) {
      append(coeff.to_string());
    } else {
      append(std::to_string(coeff.num()) + "/" + std::to_string(coeff.den()));
      if (!num.empty() || !den.empty()) {
        // "a/b*x" parses as (a/b)*x, so no parentheses are needed.
      }
    }
  }
  for (const auto& f : num) append(print(f, kPrecProduct + 1));
  if (!den.empty()) {
    std::string d;
    if (den.size() == 1) {
      d = print(den.front(), kPrecPower);
    } else {
      std::string inner;
      for (const auto& f : den) {
        if (!inner.empty()) inner += "*";
        inner += print(f, kPrecProduct + 1);
      }
      d = "(" + inner + ")";
    }
    if (!coeff.is_integer() && num.empty() && coeff.num() != 1) {
      out = std::to_string(coeff.num()) + "/(" + std::to_string(coeff.den()) + "*" +
            (den.size() == 1 ? print(den.front(), kPrecProduct + 1) : d.substr(1, d.size() - 2)) +
            ")";
      return paren(out, parent_prec > kPrecProduct);
    }
    out += "/" + d;
  }
  const bool multi = out.find_first_of("*/") != std::string::npos;
  return paren(out, multi && parent_prec > kPrecProduct);
}

inline std::string print(const Expr& e, int parent_prec) {
  switch (e.op()) {
    case Op::Num: {
      const Rational& v = e.value();
      std::string s = v.to_string();
      const bool needs = v.is_negative() || !v.is_integer();
      return paren(s, needs && parent_prec > kPrecSum);
    }
    case Op::Coord:
    case Op::Param:
    case Op::Aux: return e.name();
    case Op::Add: {
      std::string out;
      bool first = true;
      for (const auto& t : e.args()) {
        bool neg = false;
        std::string body;
        if (t.op() == Op::Num) {
          neg = t.value().is_negative();
          body = t.value().abs().to_string();
        } else if (t.op() == Op::Mul || (t.op() == Op::Pow && t.exponent().is_negative())) {
          body = print_product(t, kPrecSum, neg);
        } else {
          body = print(t, kPrecSum);
        }
        if (first) {
          out = (neg ? "-" : "") + body;
        } else {
          out += (neg ? " - " : " + ") + body;
        }
        first = false;
      }
      return paren(out, parent_prec > kPrecSum);
    }
    case Op::Mul: {
      bool neg = false;
      std::string body = print_product(e, neg ? kPrecSum : parent_prec, neg);
      if (!neg) return body;
      return paren("-" + print_product(e, kPrecProduct, neg), parent_prec > kPrecSum);
    }
    case Op::Pow: {
      const Rational& r = e.exponent();
      if (r.is_negative()) {
        bool neg = false;
        return print_product(e, parent_prec, neg);
      }
      if (r == Rational(1, 2)) return "sqrt(" + print(e.arg(), 0) + ")";
      return paren(print(e.arg(), kPrecPower + 1) + "^" + print_exponent(r),
                   parent_prec > kPrecPower);
    }
    default: return std::string(function_name(e.op())) + "(" + print(e.arg(), 0) + ")";
  }
}

}  // namespace detail

/// Infix text in the same grammar that parse() accepts.
inline std::string to_string(const Expr& e) { return detail::print(e, 0); }

// ---------------------------------------------------------------------------
// Numeric evaluation

struct EvalPoint {
  std::span<const double> coords;
  std::span<const double> params;
  std::span<const double> aux = {};
};

namespace detail {

inline double checked(double v, const Expr& e, const char* what) {
  if (!std::isfinite(v)) throw DomainError(what, to_string(e));
  return v;
}

}  // namespace detail

/// IEEE double evaluation. Throws DomainError at poles, logs of nonpositive
/// values, division by zero and non-finite intermediate results.
inline double eval(const Expr& e, const EvalPoint& at) {
  switch (e.op()) {
    case Op::Num: return e.value().to_double();
    case Op::Coord: return at.coords[static_cast<std::size_t>(e.index())];
    case Op::Param: return at.params[static_cast<std::size_t>(e.index())];
    case Op::Aux: return at.aux[static_cast<std::size_t>(e.index())];
    case Op::Add: {
      double s = 0.0;
      for (const auto& t : e.args()) s += eval(t, at);
      return s;
    }
    case Op::Mul: {
      double p = 1.0;
      for (const auto& f : e.args()) p *= eval(f, at);
      return p;
    }
    case Op::Pow: {
      const double b = eval(e.arg(), at);
      const Rational& r = e.exponent();
      if (b == 0.0 && r.is_negative()) throw DomainError("division by zero", to_string(e));
      if (r.is_integer()) return detail::checked(std::pow(b, static_cast<double>(r.num())), e, "overflow");
      if (b < 0.0) {
        if (r.den() % 2 == 1) {
          const double mag = std::pow(-b, r.to_double());
          return (r.num() % 2 == 0) ? mag : -mag;
        }
        throw DomainError("fractional power of a negative value", to_string(e));
      }
      return detail::checked(std::pow(b, r.to_double()), e, "overflow");
    }
    case Op::Sin: return std::sin(eval(e.arg(), at));
    case Op::Cos: return std::cos(eval(e.arg(), at));
    case Op::Tan: {
      const double a = eval(e.arg(), at);
      if (std::abs(std::cos(a)) < 1e-12) throw DomainError("tan pole", to_string(e));
      return std::tan(a);
    }
    case Op::Exp: return detail::checked(std::exp(eval(e.arg(), at)), e, "overflow");
    case Op::Ln: {
      const double a = eval(e.arg(), at);
      if (a <= 0.0) throw DomainError("logarithm of a nonpositive value", to_string(e));
      return std::log(a);
    }
    case Op::Sqrt: {
      const double a = eval(e.arg(), at);
      if (a < 0.0) throw DomainError("square root of a negative value", to_string(e));
      return std::sqrt(a);
    }
  }
  return 0.0;
}

}  // namespace noether
