#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "noether/hamiltonian.hpp"

namespace noether {

struct SymmetryCandidate {
  std::string name;
  VectorField field;
};

/// One step of a derivation: what was computed, under which rule, and the
/// resulting object printed.
struct TraceStep {
  std::string step;
  std::string rule;
  std::string object;
};

/// A zero/constant decision that a conclusion rests on.
struct Certificate {
  std::string claim;
  ZeroKind kind = ZeroKind::SymbolicZero;
};

struct ConservedQuantity {
  std::string name;
  std::optional<Expr> expr;
  std::optional<NumericPotential> numeric;
  bool trivial = false;
  std::vector<TraceStep> derivation;
  std::vector<Certificate> certificate;

  bool is_symbolic() const { return expr.has_value(); }
  std::string to_string() const { return expr ? noether::to_string(*expr) : std::string("<numeric potential>"); }
  double operator()(std::span<const double> x, std::span<const double> params) const {
    if (expr) return eval(*expr, {x, params});
    return (*numeric)(x, params);
  }
  bool numeric_evidence() const {
    return std::any_of(certificate.begin(), certificate.end(),
                       [](const Certificate& c) { return c.kind == ZeroKind::NumericZero; });
  }
};

enum class LabelKind {
  NotASymmetry,
  Noether,
  GeometricNonHamiltonian,
  ConformalSymplectic,
  BiHamiltonian,
  HigherOrderNoether,
  FunctionCoefficients,
  ConstantCoefficientsC0Zero,
  ConstantCoefficientsC0Nonzero,
  OmegaEigenOrderN,
  Inconclusive,
};

inline const char* to_string(LabelKind k) {
  switch (k) {
    case LabelKind::NotASymmetry: return "NotASymmetry";
    case LabelKind::Noether: return "Noether";
    case LabelKind::GeometricNonHamiltonian: return "GeometricNonHamiltonian";
    case LabelKind::ConformalSymplectic: return "ConformalSymplectic";
    case LabelKind::BiHamiltonian: return "BiHamiltonian";
    case LabelKind::HigherOrderNoether: return "HigherOrderNoether";
    case LabelKind::FunctionCoefficients: return "FunctionCoefficients";
    case LabelKind::ConstantCoefficientsC0Zero: return "ConstantCoefficientsC0Zero";
    case LabelKind::ConstantCoefficientsC0Nonzero: return "ConstantCoefficientsC0Nonzero";
    case LabelKind::OmegaEigenOrderN: return "OmegaEigenOrderN";
    case LabelKind::Inconclusive: return "Inconclusive";
  }
  return "?";
}

/// Label with exactly the parameters its kind carries:
///   GeometricNonHamiltonian: value;  ConformalSymplectic: value (c);
///   OmegaEigenOrderN: order, value (C);  HigherOrderNoether: order;
///   FunctionCoefficients / ConstantCoefficients*: order, coefficients;
///   Inconclusive: reason.
struct ClassificationLabel {
  LabelKind kind = LabelKind::Inconclusive;
  int order = 0;
  std::optional<Expr> value;
  std::vector<Expr> coefficients;
  std::string reason;

  std::string to_string() const {
    std::string s = noether::to_string(kind);
    switch (kind) {
      case LabelKind::GeometricNonHamiltonian:
      case LabelKind::ConformalSymplectic: s += "{" + noether::to_string(*value) + "}"; break;
      case LabelKind::OmegaEigenOrderN:
        s += "{N=" + std::to_string(order) + ", C=" + noether::to_string(*value) + "}";
        break;
      case LabelKind::HigherOrderNoether: s += "{N=" + std::to_string(order) + "}"; break;
      case LabelKind::FunctionCoefficients:
      case LabelKind::ConstantCoefficientsC0Zero:
      case LabelKind::ConstantCoefficientsC0Nonzero: {
        s += "{N=" + std::to_string(order) + ", C=(";
        for (std::size_t i = 0; i < coefficients.size(); ++i)
          s += (i ? ", " : "") + noether::to_string(coefficients[i]);
        s += ")}";
        break;
      }
      case LabelKind::Inconclusive: s += "{" + reason + "}"; break;
      default: break;
    }
    return s;
  }
};

/// Drift line filled in by numeric verification.
struct NumericCheck {
  std::string quantity;
  double max_relative_drift = 0.0;
  bool pass = false;
  std::string note;
};

struct ClassificationReport {
  std::string candidate;
  ClassificationLabel label;
  std::vector<ConservedQuantity> conserved;
  std::optional<std::pair<KForm, KForm>> bihamiltonian_pair;
  std::optional<BihamiltonianCheck> bihamiltonian_check;
  std::vector<KForm> omega_tower;  // L^j(Y)omega, j = 0, 1, ...
  std::vector<KForm> theta_forms;  // theta_(j), j = 0, 1, ...
  std::vector<TraceStep> trace;
  std::vector<Certificate> certificates;
  bool inconsistent = false;
  std::string inconsistency;
  std::vector<NumericCheck> verification;

  bool numeric_evidence() const {
    if (std::any_of(certificates.begin(), certificates.end(),
                    [](const Certificate& c) { return c.kind == ZeroKind::NumericZero; }))
      return true;
    return std::any_of(conserved.begin(), conserved.end(),
                       [](const ConservedQuantity& q) { return q.numeric_evidence(); });
  }
};

// ---------------------------------------------------------------------------
// Symmetry predicates and form towers

inline ZeroVerdict is_infinitesimal_symmetry(const VectorField& y, const HamiltonianSystem& sys) {
  return is_zero(lie_bracket(y, sys.x_h()), sys.probe_config());
}

/// Memoized towers L^j(Y)omega, L^j(Y)h and theta_(j) = L^j(Y) i(Y) omega
/// for one (Y, system) pair.
class FormTower {
 public:
  FormTower(const VectorField& y, const HamiltonianSystem& sys) : y_(y), sys_(sys) {}

  const VectorField& field() const { return y_; }
  const HamiltonianSystem& system() const { return sys_; }

  const KForm& omega(int j) {
    if (omega_.empty()) omega_.push_back(sys_.omega().form());
    while (static_cast<int>(omega_.size()) <= j) omega_.push_back(lie_derivative(y_, omega_.back()));
    return omega_[static_cast<std::size_t>(j)];
  }

  const Expr& h(int j) {
    if (h_.empty()) h_.push_back(sys_.h());
    while (static_cast<int>(h_.size()) <= j) h_.push_back(lie_derivative(y_, h_.back()));
    return h_[static_cast<std::size_t>(j)];
  }

  const KForm& theta(int j) {
    if (theta_.empty()) theta_.push_back(interior_product(y_, sys_.omega().form()));
    while (static_cast<int>(theta_.size()) <= j) theta_.push_back(lie_derivative(y_, theta_.back()));
    return theta_[static_cast<std::size_t>(j)];
  }

  std::vector<KForm> omegas() const { return {omega_.begin(), omega_.end()}; }
  std::vector<KForm> thetas() const { return {theta_.begin(), theta_.end()}; }

 private:
  VectorField y_;
  const HamiltonianSystem& sys_;
  // deque: references handed out stay valid while the towers grow.
  std::deque<KForm> omega_, theta_;
  std::deque<Expr> h_;
};

inline KForm theta_form(const VectorField& y, const HamiltonianSystem& sys, int j) {
  if (j < 0) throw PreconditionError("theta index must be nonnegative");
  FormTower t(y, sys);
  return t.theta(j);
}

// ---------------------------------------------------------------------------
// Linear dependence of 2-forms

enum class DependenceKind { Dependent, Independent, Inconclusive };

struct DependenceResult {
  DependenceKind kind = DependenceKind::Independent;
  std::vector<Expr> coefficients;  // f_0 .. f_{N-1} when Dependent
  std::vector<bool> constant;      // per coefficient
  ZeroKind certificate = ZeroKind::SymbolicZero;
  std::string reason;

  bool all_constant() const { return std::all_of(constant.begin(), constant.end(), [](bool b) { return b; }); }
};

/// Candidate coefficient functions: 1, parameter monomials (degree <= 2), h,
/// L^j(Y)h, coordinate monomials (degree <= 2).
inline std::vector<Expr> fitting_library(const HamiltonianSystem& sys, const VectorField& y, int max_order) {
  std::vector<Expr> lib{make_num(1)};
  const SpacePtr& s = sys.space();
  const int np = static_cast<int>(s->parameters().size());
  for (int i = 0; i < np; ++i) lib.push_back(s->param(i));
  for (int i = 0; i < np; ++i)
    for (int j = i; j < np; ++j) lib.push_back(normalize(s->param(i) * s->param(j)));
  lib.push_back(sys.h());
  Expr lh = sys.h();
  for (int j = 1; j <= max_order; ++j) {
    lh = lie_derivative(y, lh);
    if (lh.is_zero()) break;
    lib.push_back(lh);
  }
  for (int i = 0; i < s->dim(); ++i) lib.push_back(s->coord(i));
  for (int i = 0; i < s->dim(); ++i)
    for (int j = i; j < s->dim(); ++j) lib.push_back(normalize(s->coord(i) * s->coord(j)));
  return lib;
}

namespace detail {

inline std::optional<Rational> rationalize(double x) {
  if (std::abs(x) < 1e-12) return Rational(0);
  return Rational::approximate(x, 10000, 1e-8);
}

/// Fits values[p] ~ f(probe p) with f from the library; nullopt if nothing fits.
inline std::optional<Expr> fit_coefficient(const std::vector<double>& values, const std::vector<Expr>& lib,
                                           const std::vector<ProbeSample>& pts) {
  const std::size_t m = pts.size();
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  if (scale <= 1e-10) return make_num(0);

  std::vector<std::vector<double>> g(lib.size(), std::vector<double>(m, 0.0));
  for (std::size_t k = 0; k < lib.size(); ++k)
    for (std::size_t p = 0; p < m; ++p) g[k][p] = eval(lib[k], pts[p].at());

  // Single library element c*g.
  for (std::size_t k = 0; k < lib.size(); ++k) {
    std::optional<double> ratio;
    bool ok = true;
    for (std::size_t p = 0; p < m && ok; ++p) {
      if (std::abs(g[k][p]) < 1e-9) {
        ok = std::abs(values[p]) <= 1e-8 * std::max(1.0, scale);
        continue;
      }
      const double r = values[p] / g[k][p];
      if (!ratio) {
        ratio = r;
      } else {
        ok = std::abs(r - *ratio) <= 1e-8 * std::max(1.0, std::abs(*ratio));
      }
    }
    if (!ok || !ratio) continue;
    if (auto c = rationalize(*ratio)) return normalize(make_num(*c) * lib[k]);
  }

  if (lib.empty()) return std::nullopt;
  // Full least squares over the library.
  Eigen::MatrixXd a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(lib.size()));
  Eigen::VectorXd b(static_cast<Eigen::Index>(m));
  for (std::size_t p = 0; p < m; ++p) {
    b(static_cast<Eigen::Index>(p)) = values[p];
    for (std::size_t k = 0; k < lib.size(); ++k)
      a(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k)) = g[k][p];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::VectorXd c = qr.solve(b);
  if ((a * c - b).norm() > 1e-8 * std::max(1.0, b.norm())) return std::nullopt;
  std::vector<Expr> terms;
  for (std::size_t k = 0; k < lib.size(); ++k) {
    auto r = rationalize(c(static_cast<Eigen::Index>(k)));
    if (!r) return std::nullopt;
    if (!r->is_zero()) terms.push_back(make_num(*r) * lib[k]);
  }
  return normalize(make_add(std::move(terms)));
}

}  // namespace detail

/// Looks for target = sum_j f_j forms[j] with f_j fitted from `library` and
/// verified by is_zero. Independent when pointwise systems are inconsistent.
inline DependenceResult detect_dependence(const std::vector<KForm>& forms, const KForm& target,
                                          std::vector<Expr> library, const ProbeConfig& cfg) {
  DependenceResult out;
  if (std::none_of(library.begin(), library.end(), [](const Expr& e) { return e.is_one(); }))
    library.insert(library.begin(), make_num(1));
  if (forms.empty()) throw PreconditionError("dependence test needs at least one form");
  for (const auto& f : forms) {
    f.check_same(target);
    if (f.degree() != target.degree()) throw PreconditionError("forms of different degree");
  }
  const std::size_t nf = forms.size();
  std::vector<IndexTuple> rows;
  {
    std::set<IndexTuple> seen;
    for (const auto& f : forms)
      for (const auto& [idx, c] : f.coefficients()) seen.insert(idx);
    for (const auto& [idx, c] : target.coefficients()) seen.insert(idx);
    rows.assign(seen.begin(), seen.end());
  }
  // The zero target is the trivial combination.
  if (target.symbolically_zero()) {
    out.kind = DependenceKind::Dependent;
    out.coefficients.assign(nf, make_num(0));
    out.constant.assign(nf, true);
    return out;
  }
  std::vector<Expr> all;
  for (const auto& f : forms) {
    auto l = f.coefficient_list();
    all.insert(all.end(), l.begin(), l.end());
  }
  {
    auto l = target.coefficient_list();
    all.insert(all.end(), l.begin(), l.end());
  }
  all.insert(all.end(), library.begin(), library.end());
  const std::vector<ProbeSample> pts = valid_probe_points(cfg, all);

  std::vector<ProbeSample> used;
  std::vector<std::vector<double>> values(nf);
  for (const auto& p : pts) {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(nf));
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t j = 0; j < nf; ++j)
        a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = eval(forms[j].coefficient(rows[r]), p.at());
      b(static_cast<Eigen::Index>(r)) = eval(target.coefficient(rows[r]), p.at());
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    const Eigen::VectorXd x = qr.solve(b);
    const double scale = std::max({1.0, b.norm(), a.norm()});
    if ((a * x - b).norm() > 1e-8 * scale) {
      out.kind = DependenceKind::Independent;
      out.reason = "pointwise system inconsistent";
      return out;
    }
    if (qr.rank() < static_cast<Eigen::Index>(nf)) continue;
    used.push_back(p);
    for (std::size_t j = 0; j < nf; ++j) values[j].push_back(x(static_cast<Eigen::Index>(j)));
  }
  if (used.empty()) {
    out.kind = DependenceKind::Inconclusive;
    out.reason = "forms are linearly dependent at every probe point";
    return out;
  }
  for (std::size_t j = 0; j < nf; ++j) {
    auto f = detail::fit_coefficient(values[j], library, used);
    if (!f) {
      out.kind = DependenceKind::Inconclusive;
      out.reason = "coefficient " + std::to_string(j) + " is outside the fitting library";
      return out;
    }
    out.coefficients.push_back(*f);
  }
  KForm residual = target;
  for (std::size_t j = 0; j < nf; ++j) residual = residual - out.coefficients[j] * forms[j];
  ZeroVerdict v = is_zero(residual, cfg);
  if (!v.zero()) {
    out.kind = DependenceKind::Inconclusive;
    out.coefficients.clear();
    out.reason = "fitted combination does not verify";
    return out;
  }
  out.kind = DependenceKind::Dependent;
  out.certificate = v.kind;
  for (const auto& c : out.coefficients) out.constant.push_back(!has_coords(c));
  return out;
}

// ---------------------------------------------------------------------------
// Classification

namespace detail {

inline std::string join_exprs(const std::vector<Expr>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + to_string(v[i]);
  return s + ")";
}

class Classifier {
 public:
  Classifier(const SymmetryCandidate& y, const HamiltonianSystem& sys, int max_order)
      : y_(y), sys_(sys), cfg_(sys.probe_config()), tower_(y.field, sys), max_order_(max_order) {
    report_.candidate = y.name;
  }

  ClassificationReport run() {
    if (max_order_ < 1) throw PreconditionError("max order must be at least 1");
    walk();
    report_.omega_tower = tower_.omegas();
    report_.theta_forms = tower_.thetas();
    post_check();
    return std::move(report_);
  }

 private:
  ZeroVerdict decide(const std::string& claim, const ZeroVerdict& v) {
    report_.certificates.push_back({claim + (v.zero() ? " = 0" : " != 0"), v.kind});
    return v;
  }

  void step(const std::string& what, const std::string& rule, const std::string& obj) {
    report_.trace.push_back({what, rule, obj});
  }

  void label(LabelKind k) { report_.label.kind = k; }

  void inconclusive(const std::string& reason) {
    report_.label = {};
    report_.label.kind = LabelKind::Inconclusive;
    report_.label.reason = reason;
    step("no branch applies", "inconclusive", reason);
  }

  void walk() {
    const VectorField& y = y_.field;
    const ZeroVerdict sym = decide("[Y, X_h]", is_infinitesimal_symmetry(y, sys_));
    step("[Y, X_h]", "symmetry", sym.zero() ? "0" : lie_bracket(y, sys_.x_h()).to_string());
    if (!sym.zero()) {
      label(LabelKind::NotASymmetry);
      return;
    }
    const KForm& lw = tower_.omega(1);
    const Expr& lh = tower_.h(1);
    step("L(Y)omega", "lie-derivative", lw.to_string());
    step("L(Y)h", "lie-derivative", to_string(lh));
    const bool lw_zero = decide("L(Y)omega", is_zero(lw, cfg_)).zero();
    const bool lh_zero = decide("L(Y)h", is_zero(lh, cfg_)).zero();

    if (lw_zero) {
      if (lh_zero) return noether();
      return geometric_non_hamiltonian(lh);
    }

    const auto lib = fitting_library(sys_, y, max_order_);
    const DependenceResult d1 = detect_dependence({tower_.omega(0)}, lw, lib, cfg_);
    if (d1.kind == DependenceKind::Dependent) {
      report_.certificates.push_back({"L(Y)omega = f0 omega", d1.certificate});
      const Expr f0 = d1.coefficients[0];
      step("L(Y)omega = f0*omega", "dependence", "f0 = " + to_string(f0));
      if (d1.constant[0]) {
        if (!lh_zero) return conformal(f0);
        return c0_nonzero(1, d1.coefficients);
      }
      if (lh_zero) return function_coefficients(1, d1.coefficients);
      return inconclusive("L(Y)omega = f0*omega with non-constant f0 while L(Y)h != 0");
    }

    if (!lh_zero) return scan_nonzero_energy_change(lib);
    return scan_invariant_energy(lib);
  }

  // L(Y)h != 0 and L(Y)omega not proportional to omega.
  void scan_nonzero_energy_change(const std::vector<Expr>& lib) {
    for (int j = 2; j <= max_order_; ++j) {
      const KForm& target = tower_.omega(j);
      step("L^" + std::to_string(j) + "(Y)omega", "lie-derivative", target.to_string());
      std::vector<KForm> base;
      for (int k = 0; k < j; ++k) base.push_back(tower_.omega(k));
      const DependenceResult d = detect_dependence(base, target, lib, cfg_);
      if (d.kind != DependenceKind::Dependent) {
        step("dependence at order " + std::to_string(j), "dependence",
             d.kind == DependenceKind::Independent ? "independent" : "inconclusive: " + d.reason);
        continue;
      }
      report_.certificates.push_back({"dependence at order " + std::to_string(j), d.certificate});
      step("dependence at order " + std::to_string(j), "dependence", "coefficients " + join_exprs(d.coefficients));
      if (target.symbolically_zero() || !d.all_constant()) return bihamiltonian();
      const bool only_c0 = std::all_of(d.coefficients.begin() + 1, d.coefficients.end(),
                                       [](const Expr& c) { return c.is_zero(); });
      if (!d.coefficients[0].is_zero() && only_c0) return omega_eigen(j, d.coefficients[0]);
      if (!d.coefficients[0].is_zero()) return c0_nonzero(j, d.coefficients);
      return bihamiltonian();
    }
    bihamiltonian();
  }

  // L(Y)h = 0 and L(Y)omega not proportional to omega.
  void scan_invariant_energy(const std::vector<Expr>& lib) {
    for (int j = 2; j <= max_order_; ++j) {
      const KForm& target = tower_.omega(j);
      step("L^" + std::to_string(j) + "(Y)omega", "lie-derivative", target.to_string());
      if (decide("L^" + std::to_string(j) + "(Y)omega", is_zero(target, cfg_)).zero())
        return higher_order_noether(j);
      std::vector<KForm> base;
      for (int k = 0; k < j; ++k) base.push_back(tower_.omega(k));
      const DependenceResult d = detect_dependence(base, target, lib, cfg_);
      if (d.kind != DependenceKind::Dependent) {
        step("dependence at order " + std::to_string(j), "dependence",
             d.kind == DependenceKind::Independent ? "independent" : "inconclusive: " + d.reason);
        continue;
      }
      report_.certificates.push_back({"dependence at order " + std::to_string(j), d.certificate});
      step("dependence at order " + std::to_string(j), "dependence", "coefficients " + join_exprs(d.coefficients));
      if (!d.all_constant()) return function_coefficients(j, d.coefficients);
      if (d.coefficients[0].is_zero()) return c0_zero(j, d.coefficients);
      return c0_nonzero(j, d.coefficients);
    }
    inconclusive("no relation in the omega tower up to order " + std::to_string(max_order_));
  }

  // --- branches -----------------------------------------------------------

  void noether() {
    label(LabelKind::Noether);
    const KForm& t0 = tower_.theta(0);
    step("i(Y)omega", "noether", t0.to_string());
    ConservedQuantity q = potential_quantity("f_Y", t0, "noether");
    report_.conserved.push_back(std::move(q));
  }

  void geometric_non_hamiltonian(const Expr& lh) {
    label(LabelKind::GeometricNonHamiltonian);
    ConstantVerdict cv = is_constant(lh, *sys_.space(), cfg_);
    report_.certificates.push_back({"L(Y)h locally constant", cv.kind});
    report_.label.value = lh;
    if (!cv.constant) {
      mark_inconsistent("L(Y)h is not locally constant although L(Y)omega = 0");
      return;
    }
    ConservedQuantity q;
    q.name = "L(Y)h";
    q.expr = lh;
    q.trivial = true;
    q.derivation.push_back({"L(Y)h", "geometric-symmetry", to_string(lh)});
    report_.conserved.push_back(std::move(q));
  }

  void conformal(const Expr& c) {
    label(LabelKind::ConformalSymplectic);
    report_.label.value = c;
    const Expr& lh = tower_.h(1);
    const Expr k = normalize(lh - c * sys_.h());
    ConstantVerdict cv = is_constant(k, *sys_.space(), cfg_);
    report_.certificates.push_back({"L(Y)h - c*h locally constant", cv.kind});
    if (!cv.constant) {
      mark_inconsistent("L(Y)h - c*h is not constant");
      return;
    }
    ConservedQuantity q;
    q.name = "L(Y)h";
    q.expr = lh;
    q.derivation.push_back({"L(Y)omega = c*omega", "conformal", "c = " + to_string(c)});
    q.derivation.push_back({"L(Y)h = c*h + k", "conformal", "k = " + to_string(k)});
    report_.conserved.push_back(std::move(q));
  }

  void bihamiltonian() {
    label(LabelKind::BiHamiltonian);
    const KForm& w2 = tower_.omega(1);
    const KForm a2 = differential(sys_.space(), tower_.h(1));
    report_.bihamiltonian_pair = std::make_pair(w2, a2);
    report_.bihamiltonian_check = check_bihamiltonian_pair(sys_, w2, a2);
    step("pair (L(Y)omega, dL(Y)h)", "bihamiltonian",
         report_.bihamiltonian_check->ok ? "valid" : "invalid: " + report_.bihamiltonian_check->reason);
    chain(max_order_, "bihamiltonian");
  }

  void omega_eigen(int n, const Expr& c) {
    label(LabelKind::OmegaEigenOrderN);
    report_.label.order = n;
    report_.label.value = c;
    step("L^" + std::to_string(n) + "(Y)omega = C*omega", "omega-eigen", "C = " + to_string(c));
    chain(n, "omega-eigen");
  }

  /// Emits L^j(Y)h for j = 1..limit while nonzero, in primitive form.
  void chain(int limit, const std::string& rule) {
    for (int j = 1; j <= limit; ++j) {
      const Expr& lj = tower_.h(j);
      ZeroVerdict v = decide("L^" + std::to_string(j) + "(Y)h", is_zero(lj, cfg_));
      if (v.zero()) break;
      auto [content, prim] = primitive_part(lj);
      ConservedQuantity q;
      q.name = "L^" + std::to_string(j) + "(Y)h";
      q.expr = prim;
      q.derivation.push_back({q.name, rule, to_string(lj)});
      if (!content.is_one()) q.derivation.push_back({"primitive part", "scale", "factor " + content.to_string()});
      q.certificate.push_back({q.name + " != 0", v.kind});
      ConstantVerdict cv = is_constant(prim, *sys_.space(), cfg_);
      q.trivial = cv.constant;
      report_.conserved.push_back(std::move(q));
    }
  }

  void higher_order_noether(int n) {
    label(LabelKind::HigherOrderNoether);
    report_.label.order = n;
    const KForm& t = tower_.theta(n - 1);
    step("theta_(" + std::to_string(n - 1) + ")", "higher-order-noether", t.to_string());
    report_.conserved.push_back(potential_quantity("f", t, "higher-order-noether"));
  }

  void function_coefficients(int n, const std::vector<Expr>& coeffs) {
    label(LabelKind::FunctionCoefficients);
    report_.label.order = n;
    report_.label.coefficients = coeffs;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      if (!has_coords(coeffs[j])) continue;
      ConservedQuantity q;
      q.name = "f_" + std::to_string(j);
      q.expr = coeffs[j];
      q.derivation.push_back({"coefficient " + std::to_string(j), "function-coefficients", to_string(coeffs[j])});
      report_.conserved.push_back(std::move(q));
    }
  }

  void c0_zero(int n, const std::vector<Expr>& coeffs) {
    label(LabelKind::ConstantCoefficientsC0Zero);
    report_.label.order = n;
    report_.label.coefficients = coeffs;
    KForm gamma = tower_.theta(n - 1);
    for (int k = 1; k <= n - 1; ++k) gamma = gamma - coeffs[static_cast<std::size_t>(k)] * tower_.theta(k - 1);
    step("gamma", "constant-coefficients-c0-zero", gamma.to_string());
    ZeroVerdict v = decide("d(gamma)", is_zero(exterior_derivative(gamma), cfg_));
    if (!v.zero()) {
      mark_inconsistent("gamma is not closed");
      return;
    }
    report_.conserved.push_back(potential_quantity("f", gamma, "constant-coefficients-c0-zero"));
  }

  void c0_nonzero(int n, const std::vector<Expr>& coeffs) {
    label(LabelKind::ConstantCoefficientsC0Nonzero);
    report_.label.order = n;
    report_.label.coefficients = coeffs;
    std::vector<Expr> terms{coeffs[0] * sys_.h()};
    for (std::size_t j = 1; j < coeffs.size(); ++j) terms.push_back(coeffs[j] * tower_.h(static_cast<int>(j)));
    ConservedQuantity q;
    q.name = "f";
    q.expr = normalize(make_add(std::move(terms)));
    q.derivation.push_back({"C_0*h + sum C_j L^j(Y)h", "constant-coefficients-c0-nonzero", to_string(*q.expr)});
    q.trivial = !has_coords(*q.expr);
    report_.conserved.push_back(std::move(q));
  }

  ConservedQuantity potential_quantity(const std::string& name, const KForm& closed, const std::string& rule) {
    ConservedQuantity q;
    q.name = name;
    Potential p = poincare_potential(closed, cfg_, fitting_library(sys_, y_.field, max_order_));
    if (p.symbolic) {
      q.expr = *p.symbolic;
      q.trivial = !has_coords(*p.symbolic);
      q.derivation.push_back({"potential of " + closed.to_string(), rule, to_string(*p.symbolic)});
    } else {
      q.numeric = *p.numeric;
      q.derivation.push_back({"potential of " + closed.to_string(), rule, "numeric line integral"});
    }
    return q;
  }

  void mark_inconsistent(const std::string& why) {
    report_.inconsistent = true;
    if (!report_.inconsistency.empty()) report_.inconsistency += "; ";
    report_.inconsistency += why;
  }

  /// Every symbolic conserved quantity must satisfy L(X_h)f = 0.
  void post_check() {
    for (auto& q : report_.conserved) {
      if (!q.expr) continue;
      ZeroVerdict v = is_zero(lie_derivative(sys_.x_h(), *q.expr), cfg_);
      q.certificate.push_back({"L(X_h)" + q.name + (v.zero() ? " = 0" : " != 0"), v.kind});
      if (!v.zero()) mark_inconsistent("L(X_h)" + q.name + " is nonzero");
    }
  }

  const SymmetryCandidate& y_;
  const HamiltonianSystem& sys_;
  ProbeConfig cfg_;
  FormTower tower_;
  int max_order_;
  ClassificationReport report_;
};

}  // namespace detail

inline ClassificationReport classify(const SymmetryCandidate& y, const HamiltonianSystem& sys, int max_order = 6) {
  y.field.check_same(VectorField::zero(sys.space()));
  return detail::Classifier(y, sys, max_order).run();
}

// ---------------------------------------------------------------------------
// Related constructions

/// Solves i(Y)omega = a for Y.
inline VectorField contract_inverse(const HamiltonianSystem& sys, const KForm& a) {
  const SpacePtr& s = sys.space();
  const int n = s->n();
  std::vector<Expr> comps(static_cast<std::size_t>(2 * n));
  if (sys.omega().is_canonical()) {
    for (int i = 0; i < n; ++i) {
      comps[static_cast<std::size_t>(i)] = a.coefficient({i + n});
      comps[static_cast<std::size_t>(i + n)] = normalize(-a.coefficient({i}));
    }
  } else {
    std::vector<Expr> b;
    for (int k = 0; k < 2 * n; ++k) b.push_back(a.coefficient({k}));
    comps = detail::solve_contraction(sys.omega().matrix(), b, sys.probe_config());
  }
  return {s, std::move(comps)};
}

/// Alternate Noether route f_Y = xi_Y - i(Y)theta with d xi_Y = L(Y)theta,
/// for a 1-form theta with d theta = omega.
inline Expr conserved_via_potential(const VectorField& y, const HamiltonianSystem& sys, const KForm& theta) {
  const ProbeConfig& cfg = sys.probe_config();
  if (theta.degree() != 1) throw PreconditionError("theta must be a 1-form");
  if (!is_zero(exterior_derivative(theta) - sys.omega().form(), cfg).zero())
    throw PreconditionError("d(theta) differs from omega");
  const KForm lt = lie_derivative(y, theta);
  if (!is_zero(exterior_derivative(lt), cfg).zero())
    throw PreconditionError("L(Y)theta is not closed; Y is not a geometric symmetry");
  Potential xi = poincare_potential(lt, cfg);
  if (!xi.symbolic) throw Error("potential of L(Y)theta has no closed form");
  const Expr f = normalize(*xi.symbolic - interior_product(y, theta).value());
  Potential direct = poincare_potential(interior_product(y, sys.omega().form()), cfg);
  if (direct.symbolic && !is_constant(f - *direct.symbolic, *sys.space(), cfg).constant)
    throw Error("alternate potential route disagrees with i(Y)omega = df beyond a constant");
  return f;
}

/// Inverse Noether: the field Y_f with i(Y_f)omega = df for conserved f.
inline SymmetryCandidate generate_from_conserved(const Expr& f, const HamiltonianSystem& sys,
                                                 std::string name = "Y_f") {
  const ProbeConfig& cfg = sys.probe_config();
  ZeroVerdict v = is_zero(lie_derivative(sys.x_h(), f), cfg);
  if (!v.zero()) {
    std::string at;
    if (v.witness) {
      for (std::size_t i = 0; i < v.witness->coords.size(); ++i)
        at += (i ? ", " : "") + sys.space()->coordinate_names()[i] + "=" + std::to_string(v.witness->coords[i]);
    }
    throw PreconditionError("function is not conserved: L(X_h)f = " + std::to_string(v.witness_value) + " at (" +
                            at + ")");
  }
  VectorField y = contract_inverse(sys, differential(sys.space(), f));
  if (!is_infinitesimal_symmetry(y, sys).zero()) throw Error("generated field is not a symmetry");
  if (!is_zero(lie_derivative(y, sys.omega().form()), cfg).zero()) throw Error("generated field does not preserve omega");
  return {std::move(name), std::move(y)};
}

/// Result of acting with a symmetry on a conserved quantity.
struct ActionResult {
  std::optional<Expr> quantity;  // L(Y)f when nonzero and non-constant
  bool trivial = false;          // L(Y)f was zero or constant
};

inline ActionResult new_conserved_via_action(const VectorField& y, const Expr& f, const HamiltonianSystem& sys) {
  const ProbeConfig& cfg = sys.probe_config();
  if (!is_infinitesimal_symmetry(y, sys).zero()) throw PreconditionError("field is not an infinitesimal symmetry");
  if (!is_zero(lie_derivative(sys.x_h(), f), cfg).zero()) throw PreconditionError("function is not conserved");
  const Expr g = lie_derivative(y, f);
  if (is_zero(g, cfg).zero() || is_constant(g, *sys.space(), cfg).constant) return {std::nullopt, true};
  return {g, false};
}

inline SymmetryCandidate symmetry_bracket(const SymmetryCandidate& a, const SymmetryCandidate& b,
                                          const HamiltonianSystem& sys) {
  if (!is_infinitesimal_symmetry(a.field, sys).zero()) throw PreconditionError(a.name + " is not a symmetry");
  if (!is_infinitesimal_symmetry(b.field, sys).zero()) throw PreconditionError(b.name + " is not a symmetry");
  SymmetryCandidate c{"[" + a.name + ", " + b.name + "]", lie_bracket(a.field, b.field)};
  if (!is_infinitesimal_symmetry(c.field, sys).zero()) throw Error("bracket of symmetries failed the symmetry check");
  return c;
}

}  // namespace noether
