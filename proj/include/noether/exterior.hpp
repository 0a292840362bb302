#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "noether/symexpr.hpp"

namespace noether {

/// Vector field on a phase space, one component per coordinate.
class VectorField {
 public:
  VectorField() = default;
  VectorField(SpacePtr space, std::vector<Expr> components) : space_(std::move(space)) {
    if (!space_) throw ValidationError("vector field without a phase space");
    if (static_cast<int>(components.size()) != space_->dim())
      throw ValidationError("vector field needs " + std::to_string(space_->dim()) + " components, got " +
                            std::to_string(components.size()));
    comps_.reserve(components.size());
    for (auto& c : components) comps_.push_back(normalize(c));
  }

  static VectorField zero(SpacePtr space) {
    std::vector<Expr> c(static_cast<std::size_t>(space->dim()), make_num(0));
    return VectorField(std::move(space), std::move(c));
  }

  /// Unit field along coordinate i.
  static VectorField coordinate(SpacePtr space, int i) {
    std::vector<Expr> c(static_cast<std::size_t>(space->dim()), make_num(0));
    c.at(static_cast<std::size_t>(i)) = make_num(1);
    return VectorField(std::move(space), std::move(c));
  }

  const SpacePtr& space() const { return space_; }
  const std::vector<Expr>& components() const { return comps_; }
  const Expr& operator[](std::size_t i) const { return comps_[i]; }
  std::size_t size() const { return comps_.size(); }

  /// X(f) = sum_i X^i df/dx^i
  Expr apply(const Expr& f) const {
    std::vector<Expr> terms;
    for (std::size_t i = 0; i < comps_.size(); ++i) {
      if (comps_[i].is_zero()) continue;
      Expr d = differentiate(f, static_cast<int>(i));
      if (d.is_zero()) continue;
      terms.push_back(comps_[i] * d);
    }
    return normalize(make_add(std::move(terms)));
  }

  friend VectorField operator+(const VectorField& a, const VectorField& b) {
    a.check_same(b);
    std::vector<Expr> c;
    for (std::size_t i = 0; i < a.size(); ++i) c.push_back(a[i] + b[i]);
    return {a.space_, std::move(c)};
  }
  friend VectorField operator-(const VectorField& a, const VectorField& b) {
    a.check_same(b);
    std::vector<Expr> c;
    for (std::size_t i = 0; i < a.size(); ++i) c.push_back(a[i] - b[i]);
    return {a.space_, std::move(c)};
  }
  friend VectorField operator*(const Expr& f, const VectorField& a) {
    std::vector<Expr> c;
    for (const auto& x : a.comps_) c.push_back(f * x);
    return {a.space_, std::move(c)};
  }

  void check_same(const VectorField& o) const {
    if (!space_ || !o.space_ || !space_->same_as(*o.space_)) throw ValidationError("phase space mismatch");
  }

  /// "p1*d/dq1 - Omega^2*q1*d/dp1"
  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < comps_.size(); ++i) {
      if (comps_[i].is_zero()) continue;
      std::string c = noether::to_string(comps_[i]);
      const std::string& name = space_->coordinate_names()[i];
      const bool compound = comps_[i].op() == Op::Add;
      std::string term;
      if (comps_[i].is_one()) {
        term = "d/d" + name;
      } else if (compound) {
        term = "(" + c + ")*d/d" + name;
      } else {
        term = c + "*d/d" + name;
      }
      if (out.empty()) {
        out = term;
      } else if (term.front() == '-') {
        out += " - " + term.substr(1);
      } else {
        out += " + " + term;
      }
    }
    return out.empty() ? "0" : out;
  }

 private:
  SpacePtr space_;
  std::vector<Expr> comps_;
};

using IndexTuple = std::vector<int>;

/// Differential k-form in the coordinate coframe, stored sparsely by strictly
/// increasing index tuples. Missing tuples are zero coefficients.
class KForm {
 public:
  KForm() = default;

  static KForm zero(SpacePtr space, int degree) {
    if (degree < 0 || degree > space->dim()) throw ValidationError("form degree out of range");
    KForm f;
    f.space_ = std::move(space);
    f.degree_ = degree;
    return f;
  }

  static KForm scalar(SpacePtr space, const Expr& e) {
    KForm f = zero(std::move(space), 0);
    f.set({}, e);
    return f;
  }

  /// dx^i as a 1-form.
  static KForm differential(SpacePtr space, int i) {
    KForm f = zero(std::move(space), 1);
    f.set({i}, make_num(1));
    return f;
  }

  /// Builds a form from unordered index lists, sorting each with its
  /// permutation sign (repeated indices contribute nothing).
  static KForm from_terms(SpacePtr space, int degree, const std::vector<std::pair<Expr, IndexTuple>>& terms) {
    KForm f = zero(std::move(space), degree);
    std::map<IndexTuple, std::vector<Expr>> acc;
    for (const auto& [c, idx] : terms) {
      if (static_cast<int>(idx.size()) != degree) throw ValidationError("index tuple length differs from degree");
      for (int i : idx)
        if (i < 0 || i >= f.space_->dim()) throw ValidationError("form index out of range");
      auto [sorted, sign] = sort_with_sign(idx);
      if (sign == 0) continue;
      acc[sorted].push_back(sign > 0 ? c : -c);
    }
    for (auto& [idx, cs] : acc) f.set(idx, make_add(std::move(cs)));
    return f;
  }

  const SpacePtr& space() const { return space_; }
  int degree() const { return degree_; }
  const std::map<IndexTuple, Expr>& coefficients() const { return coeffs_; }
  bool truncated() const { return truncated_; }

  Expr coefficient(const IndexTuple& idx) const {
    auto it = coeffs_.find(idx);
    return it == coeffs_.end() ? make_num(0) : it->second;
  }

  /// Scalar value of a 0-form.
  Expr value() const { return coefficient({}); }

  bool symbolically_zero() const { return coeffs_.empty(); }

  /// Stores the normalized coefficient; symbolic zeros are dropped.
  void set(const IndexTuple& idx, const Expr& e) {
    Expr n = normalize(e);
    if (n.is_zero()) {
      coeffs_.erase(idx);
    } else {
      coeffs_[idx] = std::move(n);
    }
  }

  /// Every coefficient, in canonical tuple order (for zero tests).
  std::vector<Expr> coefficient_list() const {
    std::vector<Expr> out;
    for (const auto& [idx, c] : coeffs_) out.push_back(c);
    return out;
  }

  /// All C(2n, k) coefficients including zeros, in lexicographic tuple order.
  std::vector<IndexTuple> basis() const { return all_tuples(space_->dim(), degree_); }

  friend KForm operator+(const KForm& a, const KForm& b) { return combine(a, b, Rational(1)); }
  friend KForm operator-(const KForm& a, const KForm& b) { return combine(a, b, Rational(-1)); }
  friend KForm operator*(const Expr& f, const KForm& a) {
    KForm out = zero(a.space_, a.degree_);
    for (const auto& [idx, c] : a.coeffs_) out.set(idx, f * c);
    return out;
  }

  void check_same(const KForm& o) const {
    if (!space_ || !o.space_ || !space_->same_as(*o.space_)) throw ValidationError("phase space mismatch");
  }

  /// "2*dq1^dp2 + 2*dq2^dp1"; caret denotes the wedge product.
  std::string to_string() const {
    if (coeffs_.empty()) return "0";
    std::string out;
    for (const auto& [idx, c] : coeffs_) {
      std::string basis_name;
      for (int i : idx) {
        if (!basis_name.empty()) basis_name += "^";
        basis_name += "d" + space_->coordinate_names()[static_cast<std::size_t>(i)];
      }
      std::string cs = noether::to_string(c);
      std::string term;
      bool neg = false;
      if (idx.empty()) {
        term = cs;
      } else if (c.is_one()) {
        term = basis_name;
      } else if (c.is_num() && c.value() == Rational(-1)) {
        term = basis_name;
        neg = true;
      } else if (c.op() == Op::Add) {
        term = "(" + cs + ")*" + basis_name;
      } else {
        if (cs.front() == '-') {
          neg = true;
          cs = cs.substr(1);
        }
        term = cs + "*" + basis_name;
      }
      if (out.empty()) {
        out = (neg ? "-" : "") + term;
      } else {
        out += (neg ? " - " : " + ") + term;
      }
    }
    return out;
  }

  /// Sorts an index list; returns {sorted, sign} with sign 0 for repeats.
  static std::pair<IndexTuple, int> sort_with_sign(IndexTuple idx) {
    int sign = 1;
    for (std::size_t i = 1; i < idx.size(); ++i) {
      for (std::size_t j = i; j > 0 && idx[j - 1] >= idx[j]; --j) {
        if (idx[j - 1] == idx[j]) return {{}, 0};
        std::swap(idx[j - 1], idx[j]);
        sign = -sign;
      }
    }
    return {idx, sign};
  }

  static std::vector<IndexTuple> all_tuples(int dim, int k) {
    std::vector<IndexTuple> out;
    IndexTuple cur;
    auto rec = [&](auto&& self, int start) -> void {
      if (static_cast<int>(cur.size()) == k) {
        out.push_back(cur);
        return;
      }
      for (int i = start; i < dim; ++i) {
        cur.push_back(i);
        self(self, i + 1);
        cur.pop_back();
      }
    };
    rec(rec, 0);
    return out;
  }

 private:
  static KForm combine(const KForm& a, const KForm& b, const Rational& s) {
    a.check_same(b);
    if (a.degree_ != b.degree_) throw ValidationError("adding forms of different degree");
    KForm out = a;
    for (const auto& [idx, c] : b.coeffs_) out.set(idx, out.coefficient(idx) + s * c);
    return out;
  }

  friend KForm exterior_derivative(const KForm& a);
  friend KForm wedge(const KForm& a, const KForm& b);

  SpacePtr space_;
  int degree_ = 0;
  std::map<IndexTuple, Expr> coeffs_;
  bool truncated_ = false;
};

// ---------------------------------------------------------------------------
// Operations

inline KForm wedge(const KForm& a, const KForm& b) {
  a.check_same(b);
  const int k = a.degree() + b.degree();
  if (k > a.space()->dim()) {
    KForm z = KForm::zero(a.space(), a.space()->dim());
    z.truncated_ = true;
    return z;
  }
  std::vector<std::pair<Expr, IndexTuple>> terms;
  for (const auto& [ia, ca] : a.coefficients())
    for (const auto& [ib, cb] : b.coefficients()) {
      IndexTuple idx = ia;
      idx.insert(idx.end(), ib.begin(), ib.end());
      terms.emplace_back(ca * cb, std::move(idx));
    }
  return KForm::from_terms(a.space(), k, terms);
}

/// d(sum a_I dx^I) = sum_I sum_j da_I/dx^j dx^j ^ dx^I. The derivative of a
/// top-degree form is returned as the zero top form with truncated() set.
inline KForm exterior_derivative(const KForm& a) {
  const int dim = a.space()->dim();
  if (a.degree() >= dim) {
    KForm z = KForm::zero(a.space(), dim);
    z.truncated_ = true;
    return z;
  }
  std::vector<std::pair<Expr, IndexTuple>> terms;
  for (const auto& [idx, c] : a.coefficients()) {
    for (int j = 0; j < dim; ++j) {
      if (std::find(idx.begin(), idx.end(), j) != idx.end()) continue;
      Expr d = differentiate(c, j);
      if (d.is_zero()) continue;
      IndexTuple full{j};
      full.insert(full.end(), idx.begin(), idx.end());
      terms.emplace_back(d, std::move(full));
    }
  }
  return KForm::from_terms(a.space(), a.degree() + 1, terms);
}

/// Contraction into the first slot: i(X)(a dx^I) = sum_r (-1)^r X^{I_r} a dx^{I \ I_r}.
inline KForm interior_product(const VectorField& x, const KForm& a) {
  if (a.degree() < 1) throw PreconditionError("interior product of a 0-form");
  if (!x.space() || !a.space() || !x.space()->same_as(*a.space())) throw ValidationError("phase space mismatch");
  std::vector<std::pair<Expr, IndexTuple>> terms;
  for (const auto& [idx, c] : a.coefficients()) {
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const Expr& xr = x[static_cast<std::size_t>(idx[r])];
      if (xr.is_zero()) continue;
      IndexTuple rest = idx;
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(r));
      Expr coeff = xr * c;
      terms.emplace_back(r % 2 == 0 ? coeff : -coeff, std::move(rest));
    }
  }
  return KForm::from_terms(a.space(), a.degree() - 1, terms);
}

/// Lie derivative of a function: L(X)f = X(f).
inline Expr lie_derivative(const VectorField& x, const Expr& f) { return x.apply(f); }

/// Cartan's formula L(X) = i(X) d + d i(X).
inline KForm lie_derivative(const VectorField& x, const KForm& a) {
  if (!x.space() || !a.space() || !x.space()->same_as(*a.space())) throw ValidationError("phase space mismatch");
  if (a.degree() == 0) return KForm::scalar(a.space(), x.apply(a.value()));
  KForm first = a.degree() < a.space()->dim() ? interior_product(x, exterior_derivative(a))
                                               : KForm::zero(a.space(), a.degree());
  KForm second = exterior_derivative(interior_product(x, a));
  return first + second;
}

/// [X, Y]^k = X(Y^k) - Y(X^k)
inline VectorField lie_bracket(const VectorField& x, const VectorField& y) {
  x.check_same(y);
  std::vector<Expr> c;
  c.reserve(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) c.push_back(x.apply(y[k]) - y.apply(x[k]));
  return {x.space(), std::move(c)};
}

inline ZeroVerdict is_zero(const KForm& a, const ProbeConfig& cfg) {
  const auto list = a.coefficient_list();
  return is_zero_all(list, cfg);
}

inline ZeroVerdict is_zero(const VectorField& x, const ProbeConfig& cfg) {
  return is_zero_all(x.components(), cfg);
}

/// Canonical symplectic form sum_i dq^i ^ dp_i.
inline KForm canonical_symplectic_form(const SpacePtr& space) {
  std::vector<std::pair<Expr, IndexTuple>> terms;
  for (int i = 0; i < space->n(); ++i) terms.emplace_back(make_num(1), IndexTuple{i, i + space->n()});
  return KForm::from_terms(space, 2, terms);
}

/// Liouville form sum_i p_i dq^i (its exterior derivative is minus the canonical form).
inline KForm liouville_form(const SpacePtr& space) {
  std::vector<std::pair<Expr, IndexTuple>> terms;
  for (int i = 0; i < space->n(); ++i) terms.emplace_back(space->coord(i + space->n()), IndexTuple{i});
  return KForm::from_terms(space, 1, terms);
}

inline KForm differential(const SpacePtr& space, const Expr& f) {
  return exterior_derivative(KForm::scalar(space, f));
}

}  // namespace noether
