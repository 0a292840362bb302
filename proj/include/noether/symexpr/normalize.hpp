#pragma once

#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "noether/symexpr/expr.hpp"

namespace noether {

// A normalized expression is a sum of terms c * prod(atom_i ^ e_i) with
// rational c and rational e_i. Atoms are coordinates, parameters, function
// applications with normalized arguments, and normalized sums raised to a
// power that cannot be expanded (negative or fractional).
//
// Rewrite rules applied on top of expansion:
//   sin(u)^2 + cos(u)^2 -> 1
//   cos(u)^-2           -> 1 + tan(u)^2      (only this direction)
//   (N / S^k)           -> (N/S) / S^(k-1)   when S divides N exactly
// together with x*0, x*1, x+0, x^0, x^1 folding from the representation itself.

struct Factor {
  Expr base;
  Rational exp;
};
using Monomial = std::vector<Factor>;

/// Lexicographic order on exponent vectors (atoms ordered by compare()).
/// Negative result means `a` comes first; this is also the leading-term order
/// used by exact division.
inline int compare_monomials(const Monomial& a, const Monomial& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    int c;
    if (i == a.size()) {
      c = 1;
    } else if (j == b.size()) {
      c = -1;
    } else {
      c = compare(a[i].base, b[j].base);
    }
    if (c < 0) return a[i].exp.is_negative() ? 1 : -1;
    if (c > 0) return b[j].exp.is_negative() ? -1 : 1;
    const int d = compare(a[i].exp, b[j].exp);
    if (d != 0) return d > 0 ? -1 : 1;
    ++i;
    ++j;
  }
  return 0;
}

struct MonomialOrder {
  bool operator()(const Monomial& a, const Monomial& b) const { return compare_monomials(a, b) < 0; }
};

using Poly = std::map<Monomial, Rational, MonomialOrder>;

namespace poly {

inline void add_term(Poly& p, const Monomial& m, const Rational& c) {
  if (c.is_zero()) return;
  auto [it, inserted] = p.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second.is_zero()) p.erase(it);
  }
}

inline Monomial mul(const Monomial& a, const Monomial& b) {
  Monomial out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    int c;
    if (i == a.size()) {
      c = 1;
    } else if (j == b.size()) {
      c = -1;
    } else {
      c = compare(a[i].base, b[j].base);
    }
    if (c < 0) {
      out.push_back(a[i++]);
    } else if (c > 0) {
      out.push_back(b[j++]);
    } else {
      Rational e = a[i].exp + b[j].exp;
      if (!e.is_zero()) out.push_back({a[i].base, e});
      ++i;
      ++j;
    }
  }
  return out;
}

inline Monomial pow(const Monomial& m, const Rational& r) {
  Monomial out;
  out.reserve(m.size());
  for (const auto& f : m) out.push_back({f.base, f.exp * r});
  return out;
}

/// m / d with exponents subtracted.
inline Monomial div(const Monomial& m, const Monomial& d) { return mul(m, pow(d, Rational(-1))); }

inline Poly constant(const Rational& c) {
  Poly p;
  add_term(p, {}, c);
  return p;
}

inline Poly atom(const Expr& base, const Rational& e = Rational(1)) {
  Poly p;
  p.emplace(Monomial{{base, e}}, Rational(1));
  return p;
}

inline Poly add(const Poly& a, const Poly& b) {
  Poly out = a;
  for (const auto& [m, c] : b) add_term(out, m, c);
  return out;
}

inline Poly scale(const Poly& a, const Rational& s) {
  if (s.is_zero()) return {};
  Poly out;
  for (const auto& [m, c] : a) out.emplace(m, c * s);
  return out;
}

inline Poly mul(const Poly& a, const Poly& b) {
  Poly out;
  for (const auto& [ma, ca] : a)
    for (const auto& [mb, cb] : b) add_term(out, mul(ma, mb), ca * cb);
  return out;
}

inline Poly pow(const Poly& a, std::int64_t e) {
  Poly result = constant(Rational(1));
  Poly base = a;
  while (e > 0) {
    if (e & 1) result = mul(result, base);
    e >>= 1;
    if (e > 0) base = mul(base, base);
  }
  return result;
}

inline std::optional<Rational> as_constant(const Poly& p) {
  if (p.empty()) return Rational(0);
  if (p.size() == 1 && p.begin()->first.empty()) return p.begin()->second;
  return std::nullopt;
}

/// Positive rational content (gcd of numerators over lcm of denominators),
/// signed so that the leading coefficient of p / content is positive.
inline Rational signed_content(const Poly& p) {
  if (p.empty()) return Rational(1);
  std::int64_t g = 0, l = 1;
  for (const auto& [m, c] : p) {
    g = std::gcd(g, c.num() < 0 ? -c.num() : c.num());
    l = std::lcm(l, c.den());
  }
  Rational content(g, l);
  if (p.begin()->second.is_negative()) content = -content;
  return content;
}

/// Exact division a / d when the remainder vanishes.
inline std::optional<Poly> exact_divide(const Poly& a, const Poly& d) {
  if (d.empty()) return std::nullopt;
  const auto& [lead_m, lead_c] = *d.begin();
  Poly rem = a, q;
  for (int guard = 0; !rem.empty(); ++guard) {
    if (guard > 256) return std::nullopt;
    const auto& [rm, rc] = *rem.begin();
    const Monomial qm = div(rm, lead_m);
    const Rational qc = rc / lead_c;
    add_term(q, qm, qc);
    Poly sub;
    for (const auto& [dm, dc] : d) sub.emplace(mul(qm, dm), -(dc * qc));
    const Monomial before = rm;
    rem = add(rem, sub);
    if (!rem.empty() && compare_monomials(rem.begin()->first, before) <= 0) return std::nullopt;
  }
  return q;
}

}  // namespace poly

Expr from_poly(const Poly& p);
Poly to_poly(const Expr& e);

namespace detail {

inline constexpr std::int64_t kMaxExpandPower = 16;

inline Monomial without(const Monomial& m, std::size_t idx) {
  Monomial out = m;
  out.erase(out.begin() + static_cast<std::ptrdiff_t>(idx));
  return out;
}

inline std::optional<std::size_t> find_factor(const Monomial& m, const Expr& base) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (compare(m[i].base, base) == 0) return i;
  return std::nullopt;
}

/// Atoms whose exponent became an integer after multiplication (e.g. a
/// sqrt times itself) are re-expanded so the representation stays canonical.
inline bool rule_expand_atoms(Poly& p) {
  for (const auto& [m, c] : p) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      const Factor& f = m[i];
      const Op op = f.base.op();
      const bool integral = f.exp.is_integer();
      bool expand = false;
      if (op == Op::Num || op == Op::Mul || op == Op::Pow) expand = integral;
      if (op == Op::Add) expand = integral && !f.exp.is_negative() && f.exp.num() <= kMaxExpandPower;
      if (op == Op::Num && !integral) expand = f.base.value().pow(f.exp).has_value();
      if (!expand) continue;
      Poly replacement = poly::mul(to_poly(make_pow(f.base, f.exp)), Poly{{without(m, i), c}});
      Poly rest = p;
      rest.erase(m);
      p = poly::add(rest, replacement);
      return true;
    }
  }
  return false;
}

inline bool rule_cos_inverse_square(Poly& p) {
  for (const auto& [m, c] : p) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      const Factor& f = m[i];
      if (f.base.op() != Op::Cos || !f.exp.is_integer() || !f.exp.is_negative() || f.exp.num() % 2 != 0)
        continue;
      const std::int64_t k = -f.exp.num() / 2;
      Poly one_plus_tan2 = poly::add(poly::constant(Rational(1)), poly::atom(tan(f.base.arg()), Rational(2)));
      Poly replacement = poly::mul(poly::pow(one_plus_tan2, k), Poly{{without(m, i), c}});
      Poly rest = p;
      rest.erase(m);
      p = poly::add(rest, replacement);
      return true;
    }
  }
  return false;
}

inline Monomial with_exponent(const Monomial& m, const Expr& base, const Rational& delta) {
  return poly::mul(m, Monomial{{base, delta}});
}

inline bool rule_pythagoras(Poly& p) {
  for (const auto& [m, c] : p) {
    for (const auto& f : m) {
      if (f.base.op() != Op::Sin || !f.exp.is_integer() || f.exp.num() < 2) continue;
      const Expr cos_u = cos(f.base.arg());
      Monomial partner = with_exponent(with_exponent(m, f.base, Rational(-2)), cos_u, Rational(2));
      auto it = p.find(partner);
      if (it == p.end() || !(it->second == c)) continue;
      const Monomial reduced = with_exponent(m, f.base, Rational(-2));
      const Rational coeff = c;
      const Monomial mine = m;
      p.erase(it);
      p.erase(mine);
      poly::add_term(p, reduced, coeff);
      return true;
    }
  }
  return false;
}

inline bool rule_cancel_sum_atoms(Poly& p) {
  std::vector<Factor> candidates;
  for (const auto& [m, c] : p)
    for (const auto& f : m)
      if (f.base.op() == Op::Add && f.exp.is_integer() && f.exp.is_negative()) {
        bool seen = false;
        for (const auto& g : candidates)
          if (compare(g.base, f.base) == 0 && g.exp == f.exp) seen = true;
        if (!seen) candidates.push_back(f);
      }
  for (const auto& cand : candidates) {
    Poly group, rest;
    for (const auto& [m, c] : p) {
      auto idx = find_factor(m, cand.base);
      if (idx && m[*idx].exp == cand.exp) {
        poly::add_term(group, without(m, *idx), c);
      } else {
        poly::add_term(rest, m, c);
      }
    }
    const Poly divisor = to_poly(cand.base);
    auto q = poly::exact_divide(group, divisor);
    if (!q) continue;
    const Rational next = cand.exp + Rational(1);
    Poly lifted = next.is_zero() ? *q : poly::mul(*q, poly::atom(cand.base, next));
    p = poly::add(rest, lifted);
    return true;
  }
  return false;
}

inline void apply_rules(Poly& p) {
  for (int guard = 0; guard < 512; ++guard) {
    if (rule_expand_atoms(p)) continue;
    if (rule_cos_inverse_square(p)) continue;
    if (rule_pythagoras(p)) continue;
    if (rule_cancel_sum_atoms(p)) continue;
    return;
  }
}

inline Poly normalized_poly(const Expr& e) {
  Poly p = to_poly(e);
  apply_rules(p);
  return p;
}

inline Poly function_poly(Op op, const Expr& raw_arg) {
  if (op == Op::Sqrt) return to_poly(make_pow(raw_arg, Rational(1, 2)));
  Poly a = normalized_poly(raw_arg);
  const auto k = poly::as_constant(a);
  if (k && k->is_zero()) {
    switch (op) {
      case Op::Sin:
      case Op::Tan: return {};
      case Op::Cos:
      case Op::Exp: return poly::constant(Rational(1));
      default: break;
    }
  }
  if (op == Op::Ln && k && k->is_one()) return {};
  bool negate_result = false;
  if ((op == Op::Sin || op == Op::Tan || op == Op::Cos) && !a.empty() && a.begin()->second.is_negative()) {
    a = poly::scale(a, Rational(-1));
    negate_result = op != Op::Cos;
  }
  Poly out = poly::atom(make_func(op, from_poly(a)));
  return negate_result ? poly::scale(out, Rational(-1)) : out;
}

inline Poly power_poly(const Expr& raw_base, const Rational& r) {
  if (r.is_zero()) return poly::constant(Rational(1));
  Poly b = normalized_poly(raw_base);
  if (b.empty()) {
    if (r.is_negative()) throw DomainError("division by zero", to_string(make_pow(raw_base, r)));
    return {};
  }
  if (b.size() == 1) {
    const auto& [m, c] = *b.begin();
    if (r.is_integer()) return Poly{{poly::pow(m, r), c.pow(r.num())}};
    // fractional power of a single term
    if (m.empty()) {
      if (auto exact = c.pow(r)) return poly::constant(*exact);
      return poly::atom(make_num(c), r);
    }
    if (c.is_one() && m.size() == 1 && m.front().exp.is_one()) return poly::atom(m.front().base, r);
    return poly::atom(from_poly(b), r);
  }
  if (r.is_integer() && !r.is_negative() && r.num() <= kMaxExpandPower) return poly::pow(b, r.num());
  if (r.is_integer()) {
    const Rational content = poly::signed_content(b);
    Poly prim = poly::scale(b, Rational(1) / content);
    return poly::scale(poly::atom(from_poly(prim), r), content.pow(r.num()));
  }
  return poly::atom(from_poly(b), r);
}

}  // namespace detail

inline Poly to_poly(const Expr& e) {
  switch (e.op()) {
    case Op::Num: return poly::constant(e.value());
    case Op::Coord:
    case Op::Param:
    case Op::Aux: return poly::atom(e);
    case Op::Add: {
      Poly out;
      for (const auto& t : e.args()) out = poly::add(out, to_poly(t));
      return out;
    }
    case Op::Mul: {
      Poly out = poly::constant(Rational(1));
      for (const auto& f : e.args()) {
        out = poly::mul(out, to_poly(f));
        if (out.empty()) return out;
      }
      return out;
    }
    case Op::Pow: return detail::power_poly(e.arg(), e.exponent());
    default: return detail::function_poly(e.op(), e.arg());
  }
}

inline Expr from_poly(const Poly& p) {
  std::vector<Expr> terms;
  terms.reserve(p.size());
  for (const auto& [m, c] : p) {
    std::vector<Expr> factors;
    if (!c.is_one() || m.empty()) factors.push_back(make_num(c));
    for (const auto& f : m) factors.push_back(make_pow(f.base, f.exp));
    terms.push_back(make_mul(std::move(factors)));
  }
  return make_add(std::move(terms));
}

/// Canonical form. Idempotent; two expressions with the same normal form are
/// equal as functions wherever both are defined.
inline Expr normalize(const Expr& e) { return from_poly(detail::normalized_poly(e)); }

/// Normal form as a term map (already rule-reduced).
inline Poly normal_poly(const Expr& e) { return detail::normalized_poly(e); }

// ---------------------------------------------------------------------------
// Calculus

namespace detail {

inline Expr diff_raw(const Expr& e, int index) {
  if (!depends_on_coord(e, index)) return make_num(0);
  switch (e.op()) {
    case Op::Coord: return make_num(1);
    case Op::Add: {
      std::vector<Expr> terms;
      for (const auto& t : e.args()) {
        Expr d = diff_raw(t, index);
        if (!d.is_zero()) terms.push_back(std::move(d));
      }
      return make_add(std::move(terms));
    }
    case Op::Mul: {
      std::vector<Expr> terms;
      const auto& fs = e.args();
      for (std::size_t k = 0; k < fs.size(); ++k) {
        Expr d = diff_raw(fs[k], index);
        if (d.is_zero()) continue;
        std::vector<Expr> prod;
        for (std::size_t l = 0; l < fs.size(); ++l)
          if (l != k) prod.push_back(fs[l]);
        prod.push_back(std::move(d));
        terms.push_back(make_mul(std::move(prod)));
      }
      return make_add(std::move(terms));
    }
    case Op::Pow: {
      const Rational& r = e.exponent();
      return make_mul({make_num(r), make_pow(e.arg(), r - Rational(1)), diff_raw(e.arg(), index)});
    }
    case Op::Sin: return cos(e.arg()) * diff_raw(e.arg(), index);
    case Op::Cos: return make_num(-1) * sin(e.arg()) * diff_raw(e.arg(), index);
    case Op::Tan:
      return (make_num(1) + make_pow(tan(e.arg()), Rational(2))) * diff_raw(e.arg(), index);
    case Op::Exp: return e * diff_raw(e.arg(), index);
    case Op::Ln: return diff_raw(e.arg(), index) * make_pow(e.arg(), Rational(-1));
    case Op::Sqrt:
      return make_mul({make_num(Rational(1, 2)), make_pow(e.arg(), Rational(-1, 2)), diff_raw(e.arg(), index)});
    default: return make_num(0);
  }
}

}  // namespace detail

/// Exact partial derivative with respect to coordinate `index`, normalized.
/// Parameters and auxiliary variables differentiate to zero.
inline Expr differentiate(const Expr& e, int index) { return normalize(detail::diff_raw(e, index)); }

/// Replaces leaves for which `leaf` returns a value; the result is not normalized.
inline Expr substitute(const Expr& e, const std::function<std::optional<Expr>(const Expr&)>& leaf) {
  if (e.op() == Op::Num || e.op() == Op::Coord || e.op() == Op::Param || e.op() == Op::Aux) {
    if (auto r = leaf(e)) return *r;
    return e;
  }
  std::vector<Expr> args;
  args.reserve(e.args().size());
  bool changed = false;
  for (const auto& a : e.args()) {
    args.push_back(substitute(a, leaf));
    if (!args.back().same_node(a)) changed = true;
  }
  if (!changed) return e;
  auto n = std::make_shared<Node>(e.node());
  n->args = std::move(args);
  return Expr(std::move(n));
}

/// Splits e = factor * rest where `factor` is the signed rational content of
/// the normal form (so `rest` has coprime integer-like coefficients and a
/// positive leading coefficient).
inline std::pair<Rational, Expr> primitive_part(const Expr& e) {
  Poly p = normal_poly(e);
  if (p.empty()) return {Rational(1), make_num(0)};
  const Rational content = poly::signed_content(p);
  return {content, from_poly(poly::scale(p, Rational(1) / content))};
}

/// Normalized a - b, a + b, c * a.
inline Expr sub_n(const Expr& a, const Expr& b) { return normalize(a - b); }
inline Expr add_n(const Expr& a, const Expr& b) { return normalize(a + b); }
inline Expr mul_n(const Expr& a, const Expr& b) { return normalize(a * b); }

}  // namespace noether
