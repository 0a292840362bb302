#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "noether/exterior.hpp"

namespace noether {

using ExprMatrix = std::vector<std::vector<Expr>>;

/// Closed nondegenerate 2-form together with its antisymmetric coefficient
/// matrix M, where omega = sum_{i<j} M_ij dx^i ^ dx^j.
class SymplecticForm {
 public:
  static SymplecticForm canonical(const SpacePtr& space) {
    SymplecticForm w;
    w.form_ = canonical_symplectic_form(space);
    w.canonical_ = true;
    w.build_matrix();
    return w;
  }

  /// Validates closedness and probe nondegeneracy of an explicit 2-form.
  static SymplecticForm from_form(const KForm& form, const ProbeConfig& cfg) {
    if (form.degree() != 2) throw ValidationError("symplectic form must have degree 2");
    SymplecticForm w;
    w.form_ = form;
    w.build_matrix();
    const KForm dw = exterior_derivative(form);
    std::size_t bad = 0;
    const auto list = dw.coefficient_list();
    ZeroVerdict v = is_zero_all(list, cfg, &bad);
    if (!v.zero()) throw ValidationError("symplectic form is not closed: d(omega) has coefficient " + to_string(list[bad]));
    w.check_nondegenerate(cfg);
    w.canonical_ = is_zero(form - canonical_symplectic_form(form.space()), cfg).symbolic();
    return w;
  }

  const KForm& form() const { return form_; }
  const ExprMatrix& matrix() const { return m_; }
  bool is_canonical() const { return canonical_; }
  const SpacePtr& space() const { return form_.space(); }

  /// Numeric matrix at a point.
  Eigen::MatrixXd numeric(const EvalPoint& at) const {
    const int d = static_cast<int>(m_.size());
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) = eval(m_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], at);
    return a;
  }

 private:
  void build_matrix() {
    const int d = form_.space()->dim();
    m_.assign(static_cast<std::size_t>(d), std::vector<Expr>(static_cast<std::size_t>(d), make_num(0)));
    for (const auto& [idx, c] : form_.coefficients()) {
      const auto i = static_cast<std::size_t>(idx[0]), j = static_cast<std::size_t>(idx[1]);
      m_[i][j] = c;
      m_[j][i] = normalize(-c);
    }
  }

  void check_nondegenerate(const ProbeConfig& cfg) const {
    std::vector<Expr> entries;
    for (const auto& row : m_) entries.insert(entries.end(), row.begin(), row.end());
    const auto pts = valid_probe_points(cfg, entries);
    for (const auto& p : pts) {
      Eigen::MatrixXd a = numeric(p.at());
      const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
      if (std::abs(a.determinant()) > cfg.tolerance * std::pow(scale, static_cast<double>(a.rows()))) return;
    }
    throw ValidationError("symplectic form is degenerate at probes");
  }

  KForm form_;
  ExprMatrix m_;
  bool canonical_ = false;
};

namespace detail {

/// Solves sum_i X^i M_ik = b_k by symbolic Gaussian elimination; pivots are
/// chosen among entries that probe as nonzero (smallest expression first).
inline std::vector<Expr> solve_contraction(const ExprMatrix& m, const std::vector<Expr>& b, const ProbeConfig& cfg) {
  const std::size_t d = m.size();
  // Row k of the augmented system: sum_i M_ik X^i = b_k.
  ExprMatrix a(d, std::vector<Expr>(d + 1, make_num(0)));
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < d; ++i) a[k][i] = m[i][k];
    a[k][d] = b[k];
  }
  std::vector<std::size_t> pivot_row(d);
  std::vector<bool> used(d, false);
  for (std::size_t col = 0; col < d; ++col) {
    std::optional<std::size_t> best;
    for (std::size_t r = 0; r < d; ++r) {
      if (used[r] || a[r][col].is_zero()) continue;
      if (!is_zero(a[r][col], cfg).zero() && (!best || node_count(a[r][col]) < node_count(a[*best][col]))) best = r;
    }
    if (!best) {
      std::string minor;
      for (std::size_t r = 0; r < d; ++r)
        if (!used[r]) minor += (minor.empty() ? "" : ", ") + to_string(a[r][col]);
      throw ValidationError("cannot solve for the Hamiltonian vector field: column " + std::to_string(col) +
                            " has no nonzero pivot among [" + minor + "]");
    }
    used[*best] = true;
    pivot_row[col] = *best;
    const Expr piv = a[*best][col];
    for (std::size_t r = 0; r < d; ++r) {
      if (r == *best || a[r][col].is_zero()) continue;
      const Expr factor = normalize(a[r][col] / piv);
      for (std::size_t c = col; c <= d; ++c) a[r][c] = normalize(a[r][c] - factor * a[*best][c]);
    }
  }
  std::vector<Expr> x(d);
  for (std::size_t col = 0; col < d; ++col) {
    const auto& row = a[pivot_row[col]];
    x[col] = normalize(row[d] / row[col]);
  }
  return x;
}

}  // namespace detail

class HamiltonianSystem {
 public:
  const SpacePtr& space() const { return space_; }
  const SymplecticForm& omega() const { return omega_; }
  const Expr& h() const { return h_; }
  const VectorField& x_h() const { return x_h_; }
  const ProbeConfig& probe_config() const { return cfg_; }
  KForm dh() const { return differential(space_, h_); }

 private:
  friend HamiltonianSystem make_system(SpacePtr, SymplecticForm, const Expr&, const ProbeConfig&);
  SpacePtr space_;
  SymplecticForm omega_;
  Expr h_;
  VectorField x_h_;
  ProbeConfig cfg_;
};

/// Builds the system and its Hamiltonian vector field i(X_h)omega = dh.
inline HamiltonianSystem make_system(SpacePtr space, SymplecticForm omega, const Expr& h, const ProbeConfig& cfg) {
  if (!omega.space()->same_as(*space)) throw ValidationError("symplectic form lives on another phase space");
  HamiltonianSystem s;
  s.space_ = space;
  s.omega_ = std::move(omega);
  s.h_ = normalize(h);
  s.cfg_ = cfg;
  const int n = space->n();
  std::vector<Expr> comps(static_cast<std::size_t>(2 * n));
  if (s.omega_.is_canonical()) {
    for (int i = 0; i < n; ++i) {
      comps[static_cast<std::size_t>(i)] = differentiate(s.h_, i + n);
      comps[static_cast<std::size_t>(i + n)] = normalize(-differentiate(s.h_, i));
    }
  } else {
    std::vector<Expr> b;
    for (int k = 0; k < 2 * n; ++k) b.push_back(differentiate(s.h_, k));
    comps = detail::solve_contraction(s.omega_.matrix(), b, cfg);
  }
  s.x_h_ = VectorField(space, std::move(comps));
  ZeroVerdict v = is_zero(interior_product(s.x_h_, s.omega_.form()) - s.dh(), cfg);
  if (!v.zero()) throw Error("Hamiltonian vector field does not satisfy i(X_h)omega = dh");
  if (!is_zero(lie_derivative(s.x_h_, s.h_), cfg).zero()) throw Error("energy is not conserved by X_h");
  return s;
}

inline HamiltonianSystem make_system(const SpacePtr& space, const Expr& h, const ProbeConfig& cfg) {
  return make_system(space, SymplecticForm::canonical(space), h, cfg);
}

/// (coordinate name, time derivative) pairs, the components of X_h.
inline std::vector<std::pair<std::string, Expr>> hamilton_equations(const HamiltonianSystem& sys) {
  std::vector<std::pair<std::string, Expr>> out;
  for (std::size_t i = 0; i < sys.x_h().size(); ++i) out.emplace_back(sys.space()->coordinate_names()[i], sys.x_h()[i]);
  return out;
}

/// Canonical lift of a base field Z = Z^i(q) d/dq^i:
/// Z^i d/dq^i - p_j dZ^j/dq^i d/dp_i.
inline VectorField cotangent_lift(const SpacePtr& space, const std::vector<Expr>& z) {
  const int n = space->n();
  if (static_cast<int>(z.size()) != n)
    throw ValidationError("base vector field needs " + std::to_string(n) + " components");
  std::vector<Expr> zn;
  for (const auto& c : z) {
    Expr e = normalize(c);
    for (int k = n; k < 2 * n; ++k)
      if (depends_on_coord(e, k))
        throw ValidationError("base vector field depends on momentum '" + space->coordinate_names()[static_cast<std::size_t>(k)] + "'");
    zn.push_back(std::move(e));
  }
  std::vector<Expr> comps(static_cast<std::size_t>(2 * n), make_num(0));
  for (int i = 0; i < n; ++i) {
    comps[static_cast<std::size_t>(i)] = zn[static_cast<std::size_t>(i)];
    std::vector<Expr> terms;
    for (int j = 0; j < n; ++j) terms.push_back(space->coord(j + n) * differentiate(zn[static_cast<std::size_t>(j)], i));
    comps[static_cast<std::size_t>(i + n)] = -make_add(std::move(terms));
  }
  return {space, std::move(comps)};
}

// ---------------------------------------------------------------------------
// Potentials of closed 1-forms

/// Quadrature-backed line integral from the base point; not printable.
class NumericPotential {
 public:
  NumericPotential(std::vector<Expr> coeffs, std::vector<double> base)
      : coeffs_(std::move(coeffs)), base_(std::move(base)) {}

  double operator()(std::span<const double> x, std::span<const double> params) const {
    std::vector<double> y(x.size());
    auto integrand = [&](double t) {
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = base_[i] + t * (x[i] - base_[i]);
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (coeffs_[i].is_zero() || x[i] == base_[i]) continue;
        s += eval(coeffs_[i], {y, params}) * (x[i] - base_[i]);
      }
      return s;
    };
    return simpson(integrand, 0.0, 1.0, 1e-10);
  }

  const std::vector<double>& base() const { return base_; }

  /// Adaptive Simpson quadrature to absolute tolerance `tol`.
  static double simpson(const std::function<double(double)>& f, double a, double b, double tol) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
  }

 private:
  static double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                            double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
  }

  std::vector<Expr> coeffs_;
  std::vector<double> base_;
};

/// Potential f with df = a, vanishing at the base point.
struct Potential {
  std::optional<Expr> symbolic;
  std::optional<NumericPotential> numeric;

  bool is_symbolic() const { return symbolic.has_value(); }
  double operator()(std::span<const double> x, std::span<const double> params) const {
    if (symbolic) return eval(*symbolic, {x, params});
    return (*numeric)(x, params);
  }
};

namespace detail {

/// Integrates a normalized polynomial in the auxiliary variable t over [0, 1];
/// nullopt when t appears other than as a nonnegative integer power.
inline std::optional<Expr> integrate_unit_interval(const Expr& integrand, int aux_index) {
  const Poly p = normal_poly(integrand);
  Poly out;
  for (const auto& [mono, c] : p) {
    Monomial rest;
    std::int64_t k = 0;
    for (const auto& f : mono) {
      if (f.base.op() == Op::Aux && f.base.index() == aux_index) {
        if (!f.exp.is_integer() || f.exp.is_negative()) return std::nullopt;
        k = f.exp.num();
      } else if (depends_on_aux(f.base, aux_index)) {
        return std::nullopt;
      } else {
        rest.push_back(f);
      }
    }
    poly::add_term(out, rest, c / Rational(k + 1));
  }
  return normalize(from_poly(out));
}

inline Rational base_rational(double x) {
  if (x == 0.0) return Rational(0);
  return Rational::approximate(x, 10000, 1e-12).value_or(Rational(0));
}

}  // namespace detail

/// Poincare-lemma potential of a closed 1-form by the straight-line homotopy
/// from `base`. Symbolic when the substituted integrand is polynomial in t;
/// otherwise any hint g with dg = a gives g - g(base); else quadrature.
inline Potential poincare_potential(const KForm& a, std::vector<double> base, const ProbeConfig& cfg,
                                    const std::vector<Expr>& hints = {}) {
  if (a.degree() != 1) throw PreconditionError("potential requires a 1-form");
  const SpacePtr& space = a.space();
  const int d = space->dim();
  if (static_cast<int>(base.size()) != d) throw ValidationError("base point has the wrong dimension");
  const KForm da = exterior_derivative(a);
  std::size_t bad = 0;
  const auto dlist = da.coefficient_list();
  if (!is_zero_all(dlist, cfg, &bad).zero())
    throw PreconditionError("1-form is not closed: d has nonzero coefficient " + to_string(dlist[bad]));

  std::vector<Rational> rb;
  bool exact_base = true;
  for (double x : base) {
    Rational r = detail::base_rational(x);
    if (std::abs(r.to_double() - x) > 1e-15 * std::max(1.0, std::abs(x))) exact_base = false;
    rb.push_back(r);
  }
  std::vector<Expr> coeffs;
  for (int i = 0; i < d; ++i) coeffs.push_back(a.coefficient({i}));

  if (exact_base) {
    const Expr t = make_aux(0, "t");
    std::vector<Expr> shifted;
    for (int i = 0; i < d; ++i) {
      const Expr b = make_num(rb[static_cast<std::size_t>(i)]);
      shifted.push_back(b + t * (space->coord(i) - b));
    }
    auto leaf = [&](const Expr& e) -> std::optional<Expr> {
      if (e.op() == Op::Coord) return shifted[static_cast<std::size_t>(e.index())];
      return std::nullopt;
    };
    std::vector<Expr> terms;
    for (int i = 0; i < d; ++i) {
      if (coeffs[static_cast<std::size_t>(i)].is_zero()) continue;
      terms.push_back(substitute(coeffs[static_cast<std::size_t>(i)], leaf) *
                      (space->coord(i) - make_num(rb[static_cast<std::size_t>(i)])));
    }
    if (auto f = detail::integrate_unit_interval(normalize(make_add(std::move(terms))), 0)) {
      return Potential{*f, std::nullopt};
    }
    auto at_base = [&](const Expr& e) -> std::optional<Expr> {
      if (e.op() == Op::Coord) return make_num(rb[static_cast<std::size_t>(e.index())]);
      return std::nullopt;
    };
    for (const auto& g : hints) {
      if (!is_zero(differential(space, g) - a, cfg).zero()) continue;
      try {
        return Potential{normalize(g - substitute(g, at_base)), std::nullopt};
      } catch (const DomainError&) {
        continue;
      }
    }
  }
  return Potential{std::nullopt, NumericPotential(std::move(coeffs), std::move(base))};
}

/// Poincare potential with the probe-box center of the space as base point.
inline Potential poincare_potential(const KForm& a, const ProbeConfig& cfg, const std::vector<Expr>& hints = {}) {
  return poincare_potential(a, a.space()->box_center(), cfg, hints);
}

/// Outcome of the bi-Hamiltonian test with the first failing condition.
struct BihamiltonianCheck {
  bool ok = false;
  std::string reason;
};

inline BihamiltonianCheck check_bihamiltonian_pair(const HamiltonianSystem& sys, const KForm& omega2,
                                                   const KForm& alpha2) {
  const ProbeConfig& cfg = sys.probe_config();
  if (omega2.degree() != 2 || alpha2.degree() != 1) return {false, "wrong degrees"};
  if (!is_zero(exterior_derivative(omega2), cfg).zero()) return {false, "second 2-form is not closed"};
  if (!is_zero(exterior_derivative(alpha2), cfg).zero()) return {false, "second 1-form is not closed"};
  if (is_zero(omega2 - sys.omega().form(), cfg).zero()) return {false, "second 2-form equals omega"};
  if (is_zero(alpha2 - sys.dh(), cfg).zero()) return {false, "second 1-form equals dh"};
  if (!is_zero(interior_product(sys.x_h(), omega2) - alpha2, cfg).zero())
    return {false, "X_h does not satisfy the second Hamilton equation"};
  return {true, ""};
}

inline bool is_bihamiltonian_pair(const HamiltonianSystem& sys, const KForm& omega2, const KForm& alpha2) {
  return check_bihamiltonian_pair(sys, omega2, alpha2).ok;
}

}  // namespace noether
