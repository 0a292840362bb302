#include <gtest/gtest.h>

#include "support.hpp"

using namespace noether;

namespace {

struct Bundled {
  SystemFile pend = load_bundled("pendulum.sys");
  SystemFile aniso = load_bundled("aniso_oscillator.sys");
  SystemFile iso = load_bundled("iso_oscillator.sys");
  SystemFile unit = load_bundled("iso_oscillator_unit.sys");
};

const Bundled& bundled() {
  static const Bundled b;
  return b;
}

Expr P(const SystemFile& f, const char* text) { return parse(text, *f.space); }

VectorField field(const SpacePtr& s, std::initializer_list<const char*> comps) {
  std::vector<Expr> c;
  for (const char* t : comps) c.push_back(parse(t, *s));
  return {s, c};
}

bool same(const Expr& a, const Expr& b, const HamiltonianSystem& s) { return is_zero(a - b, s.probe_config()).zero(); }

// ---------------------------------------------------------------------------

TEST(Symmetry, Predicates) {
  const auto& b = bundled();
  EXPECT_TRUE(is_infinitesimal_symmetry(b.pend.candidate("Y").field, b.pend.sys()).symbolic());
  EXPECT_TRUE(is_infinitesimal_symmetry(b.iso.candidate("Y").field, b.iso.sys()).symbolic());
  VectorField bad = field(b.iso.space, {"q1", "0", "0", "0"});
  ZeroVerdict v = is_infinitesimal_symmetry(bad, b.iso.sys());
  ASSERT_EQ(v.kind, ZeroKind::NonZero);
  ASSERT_TRUE(v.witness.has_value());
  VectorField br = lie_bracket(bad, b.iso.sys().x_h());
  EXPECT_TRUE(same(br[0], P(b.iso, "-p1"), b.iso.sys()));
}

TEST(Theta, Examples) {
  const auto& b = bundled();
  EXPECT_EQ(theta_form(b.pend.candidate("Y").field, b.pend.sys(), 0).to_string(), "dp_phi");
  const auto& s = b.iso.sys();
  const VectorField& y = b.iso.candidate("Y").field;
  KForm t1 = theta_form(y, s, 1);
  EXPECT_TRUE(is_zero(t1 - lie_derivative(y, interior_product(y, s.omega().form())), s.probe_config()).symbolic());
  EXPECT_TRUE(is_zero(exterior_derivative(t1) - make_num(4) * s.omega().form(), s.probe_config()).symbolic());
  EXPECT_TRUE(theta_form(VectorField::zero(b.iso.space), s, 0).symbolically_zero());
}

// Theta hierarchy identities and the X_h identities for every bundled symmetric pair, j <= 3.
TEST(Theta, HierarchyIdentities) {
  const auto& b = bundled();
  for (const SystemFile* f : {&b.pend, &b.aniso, &b.iso, &b.unit}) {
    const auto& s = f->sys();
    const auto& cfg = s.probe_config();
    for (const auto& c : f->candidates) {
      if (!is_infinitesimal_symmetry(c.field, s).zero()) continue;
      FormTower t(c.field, s);
      for (int j = 0; j <= 3; ++j) {
        const std::string where = f->name + "/" + c.name + " j=" + std::to_string(j);
        EXPECT_TRUE(is_zero(interior_product(c.field, t.theta(j)), cfg).zero()) << where;
        EXPECT_TRUE(is_zero(t.theta(j + 1) - lie_derivative(c.field, t.theta(j)), cfg).zero()) << where;
        EXPECT_TRUE(is_zero(t.theta(j + 1) - interior_product(c.field, exterior_derivative(t.theta(j))), cfg).zero()) << where;
        EXPECT_TRUE(is_zero(exterior_derivative(t.theta(j)) - t.omega(j + 1), cfg).zero()) << where;
        EXPECT_TRUE(is_zero(lie_derivative(s.x_h(), t.theta(j)), cfg).zero()) << where;
        EXPECT_TRUE(is_zero(interior_product(s.x_h(), t.theta(j)).value() + t.h(j + 1), cfg).zero()) << where;
        EXPECT_TRUE(is_zero(interior_product(s.x_h(), exterior_derivative(t.theta(j))) - differential(f->space, t.h(j + 1)), cfg)
                        .zero())
            << where;
      }
    }
  }
}

TEST(Dependence, Examples) {
  const auto& b = bundled();
  const auto& s = b.iso.sys();
  {
    FormTower t(b.iso.candidate("Y").field, s);
    DependenceResult r = detect_dependence({t.omega(0), t.omega(1)}, t.omega(2), fitting_library(s, t.field(), 6), s.probe_config());
    ASSERT_EQ(r.kind, DependenceKind::Dependent);
    EXPECT_EQ(to_string(r.coefficients[0]), "4");
    EXPECT_TRUE(r.coefficients[1].is_zero());
    EXPECT_TRUE(r.all_constant());
  }
  {
    FormTower t(b.iso.candidate("Y1").field, s);
    EXPECT_TRUE(is_zero(t.omega(3), s.probe_config()).zero());
    DependenceResult r = detect_dependence({t.omega(0), t.omega(1), t.omega(2)}, t.omega(3), {}, s.probe_config());
    ASSERT_EQ(r.kind, DependenceKind::Dependent);
    for (const auto& c : r.coefficients) EXPECT_TRUE(c.is_zero());
  }
  {
    FormTower t(b.iso.candidate("Y").field, s);
    DependenceResult r = detect_dependence({t.omega(0), t.omega(1)}, t.omega(0), {}, s.probe_config());
    ASSERT_EQ(r.kind, DependenceKind::Dependent);
    EXPECT_EQ(to_string(r.coefficients[0]), "1");
    EXPECT_TRUE(r.coefficients[1].is_zero());
  }
}

TEST(Dependence, NonConstantAndIndependent) {
  const auto& b = bundled();
  const auto& s = b.iso.sys();
  const KForm w = s.omega().form();
  const KForm w1 = lie_derivative(b.iso.candidate("Y").field, w);
  DependenceResult r = detect_dependence({w}, s.h() * w, {make_num(1), s.h()}, s.probe_config());
  ASSERT_EQ(r.kind, DependenceKind::Dependent);
  EXPECT_TRUE(same(r.coefficients[0], s.h(), s));
  EXPECT_FALSE(r.constant[0]);
  EXPECT_EQ(detect_dependence({w}, w1, {make_num(1)}, s.probe_config()).kind, DependenceKind::Independent);
}

TEST(Classify, Pendulum) {
  const auto& b = bundled();
  ClassificationReport r = classify(b.pend.candidate("Y"), b.pend.sys());
  EXPECT_EQ(r.label.kind, LabelKind::Noether);
  ASSERT_EQ(r.conserved.size(), 1u);
  EXPECT_EQ(r.conserved[0].to_string(), "p_phi");
  EXPECT_FALSE(r.inconsistent);
}

TEST(Classify, AnisotropicGeometricSymmetries) {
  const auto& b = bundled();
  const auto& s = b.aniso.sys();
  for (const char* name : {"Y1", "Y2"}) {
    ClassificationReport r = classify(b.aniso.candidate(name), s);
    EXPECT_EQ(r.label.kind, LabelKind::GeometricNonHamiltonian) << name;
    ASSERT_EQ(r.conserved.size(), 1u);
    EXPECT_TRUE(r.conserved[0].trivial);
    // Oracle: directional derivative of h along Y by central differences.
    const VectorField& y = b.aniso.candidate(name).field;
    const std::vector<double> x{0.4, -0.7, 0.3, 0.9}, p = b.aniso.space->parameter_values();
    std::vector<double> xp = x, xm = x;
    const double eps = 1e-6;
    for (int i = 0; i < 4; ++i) {
      const double yi = eval(y[static_cast<std::size_t>(i)], {x, p});
      xp[static_cast<std::size_t>(i)] += eps * yi;
      xm[static_cast<std::size_t>(i)] -= eps * yi;
    }
    const double fd = (eval(s.h(), {xp, p}) - eval(s.h(), {xm, p})) / (2 * eps);
    EXPECT_NEAR(eval(*r.label.value, {x, p}), fd, 1e-6) << name;
  }
}

TEST(Classify, IsotropicCandidates) {
  const auto& b = bundled();
  const auto& s = b.iso.sys();
  ClassificationReport y = classify(b.iso.candidate("Y"), s);
  EXPECT_EQ(y.label.to_string(), "OmegaEigenOrderN{N=2, C=4}");
  ASSERT_FALSE(y.conserved.empty());
  EXPECT_EQ(y.conserved[0].to_string(), "p1*p2 + Omega^2*q1*q2");

  ClassificationReport y1 = classify(b.iso.candidate("Y1"), s);
  EXPECT_EQ(y1.label.kind, LabelKind::BiHamiltonian);
  ASSERT_EQ(y1.conserved.size(), 2u);
  EXPECT_TRUE(same(*y1.conserved[0].expr, P(b.iso, "p1*p2 + Omega^2*q1*q2"), s));
  // Independent check: L(Y1) applied to f by hand is p2^2 + Omega^2 q2^2 = 2 h2.
  EXPECT_TRUE(same(*y1.conserved[1].expr, P(b.iso, "p2^2 + Omega^2*q2^2"), s));
  ASSERT_TRUE(y1.bihamiltonian_check.has_value());
  EXPECT_TRUE(y1.bihamiltonian_check->ok);

  ClassificationReport xh1 = classify(b.iso.candidate("X_h1"), s);
  EXPECT_EQ(xh1.label.kind, LabelKind::Noether);
  EXPECT_TRUE(same(*xh1.conserved[0].expr, P(b.iso, "(p1^2 + Omega^2*q1^2)/2"), s));

  EXPECT_EQ(classify(b.iso.candidate("Z"), s).label.kind, LabelKind::NotASymmetry);
  EXPECT_EQ(classify({"dilate", field(b.iso.space, {"q1", "0", "0", "0"})}, s).label.kind, LabelKind::NotASymmetry);
}

TEST(Classify, HamiltonianFieldIsNoether) {
  const auto& b = bundled();
  for (const SystemFile* f : {&b.pend, &b.iso}) {
    const auto& s = f->sys();
    ClassificationReport r = classify({"X_h", s.x_h()}, s);
    EXPECT_EQ(r.label.kind, LabelKind::Noether) << f->name;
    ASSERT_EQ(r.conserved.size(), 1u);
    ASSERT_TRUE(r.conserved[0].is_symbolic()) << f->name;
    EXPECT_TRUE(is_constant(*r.conserved[0].expr - s.h(), *f->space, s.probe_config()).constant) << f->name;
  }
}

TEST(Classify, SyntheticLabels) {
  auto one = PhaseSpace::create(1, {"q", "p"});
  auto two = PhaseSpace::create(2, {"q1", "q2", "p1", "p2"});
  auto c1 = ProbeConfig::for_space(*one), c2 = ProbeConfig::for_space(*two);

  HamiltonianSystem free1 = make_system(one, parse("p^2/2", *one), c1);
  ClassificationReport conf = classify({"D", field(one, {"q", "p"})}, free1);
  EXPECT_EQ(conf.label.to_string(), "ConformalSymplectic{2}");

  HamiltonianSystem free2 = make_system(two, parse("(p1^2 + p2^2)/2", *two), c2);
  ClassificationReport hon = classify({"S", field(two, {"0", "p1", "0", "0"})}, free2);
  EXPECT_EQ(hon.label.to_string(), "HigherOrderNoether{N=2}");

  HamiltonianSystem half = make_system(two, parse("p1^2/2", *two), c2);
  ClassificationReport c0z = classify({"D2", field(two, {"0", "q2", "0", "0"})}, half);
  EXPECT_EQ(c0z.label.kind, LabelKind::ConstantCoefficientsC0Zero);
  ASSERT_EQ(c0z.label.coefficients.size(), 2u);
  EXPECT_EQ(to_string(c0z.label.coefficients[1]), "1");

  HamiltonianSystem flat = make_system(two, make_num(1), c2);
  ClassificationReport c0n = classify({"D", field(two, {"q1", "q2", "p1", "p2"})}, flat);
  EXPECT_EQ(c0n.label.kind, LabelKind::ConstantCoefficientsC0Nonzero);

  const auto& b = bundled();
  ClassificationReport inc = classify(b.unit.candidate("Z"), b.unit.sys(), 3);
  EXPECT_EQ(inc.label.kind, LabelKind::Inconclusive);
  EXPECT_FALSE(inc.label.reason.empty());
  EXPECT_EQ(inc.omega_tower.size(), 4u);

  for (const auto* r : {&conf, &hon, &c0z, &c0n, &inc}) EXPECT_FALSE(r->inconsistent) << r->label.to_string();
}

// Every symbolic quantity emitted for a bundled candidate or a planted symmetry is conserved.
TEST(Classify, Soundness) {
  const auto& b = bundled();
  for (const SystemFile* f : {&b.pend, &b.aniso, &b.iso, &b.unit}) {
    for (const auto& c : f->candidates) {
      ClassificationReport r = classify(c, f->sys());
      EXPECT_FALSE(r.inconsistent) << c.name << ": " << r.inconsistency;
      for (const auto& q : r.conserved)
        if (q.expr) {
          EXPECT_TRUE(is_zero(f->sys().x_h().apply(*q.expr), f->sys().probe_config()).zero()) << c.name;
        }
    }
  }
  // Rotation-invariant polynomial Hamiltonians carry the lifted rotation as a planted symmetry.
  auto two = noether::testing::oscillator_space();
  auto cfg = ProbeConfig::for_space(*two);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> coef(-3, 3);
  const Expr r2 = parse("q1^2 + q2^2", *two), s2 = parse("p1^2 + p2^2", *two), u = parse("q1*p1 + q2*p2", *two);
  const VectorField rot = field(two, {"-q2", "q1", "-p2", "p1"});
  for (int k = 0; k < 20; ++k) {
    Expr h = make_num(Rational(coef(rng))) * r2 + make_num(Rational(1 + std::abs(coef(rng)))) * s2 +
             make_num(Rational(coef(rng))) * u * u + make_num(Rational(coef(rng))) * r2 * s2 * Expr(two->param(0));
    HamiltonianSystem s = make_system(two, h, cfg);
    ClassificationReport r = classify({"R", rot}, s);
    EXPECT_EQ(r.label.kind, LabelKind::Noether) << to_string(h);
    ASSERT_EQ(r.conserved.size(), 1u);
    EXPECT_TRUE(same(*r.conserved[0].expr, parse("q1*p2 - q2*p1", *two), s)) << r.conserved[0].to_string();
    EXPECT_TRUE(is_zero(s.x_h().apply(*r.conserved[0].expr), cfg).zero());
  }
}

TEST(Classify, NoetherRoundTripAndInvariance) {
  const auto& b = bundled();
  int seen = 0;
  for (const SystemFile* f : {&b.pend, &b.aniso, &b.iso, &b.unit}) {
    const auto& s = f->sys();
    for (const auto& c : f->candidates) {
      ClassificationReport r = classify(c, s);
      if (r.label.kind != LabelKind::Noether && r.label.kind != LabelKind::HigherOrderNoether) continue;
      ASSERT_TRUE(r.conserved[0].expr.has_value());
      EXPECT_TRUE(is_zero(c.field.apply(*r.conserved[0].expr), s.probe_config()).zero()) << c.name;
      if (r.label.kind == LabelKind::Noether) {
        ++seen;
        SymmetryCandidate back = generate_from_conserved(*r.conserved[0].expr, s);
        EXPECT_TRUE(is_zero(back.field - c.field, s.probe_config()).zero()) << c.name;
      }
    }
  }
  EXPECT_GE(seen, 3);
}

TEST(Classify, DeterministicReports) {
  const auto& b = bundled();
  for (const auto& c : b.iso.candidates) {
    const std::string a = report_json(classify(c, b.iso.sys())).dump();
    const std::string d = report_json(classify(c, b.iso.sys())).dump();
    EXPECT_EQ(a, d) << c.name;
  }
}

TEST(Classify, RejectsForeignField) {
  const auto& b = bundled();
  EXPECT_THROW(classify(b.pend.candidate("Y"), b.iso.sys()), ValidationError);
}

TEST(Alternate, PotentialRoute) {
  const auto& b = bundled();
  const auto& s = b.pend.sys();
  const VectorField& y = b.pend.candidate("Y").field;
  KForm minus_pdq = KForm::from_terms(b.pend.space, 1, {{P(b.pend, "-p_theta"), {0}}, {P(b.pend, "-p_phi"), {1}}});
  KForm qdp = KForm::from_terms(b.pend.space, 1, {{P(b.pend, "theta"), {2}}, {P(b.pend, "phi"), {3}}});
  EXPECT_TRUE(is_constant(conserved_via_potential(y, s, minus_pdq) - P(b.pend, "p_phi"), *b.pend.space, s.probe_config()).constant);
  EXPECT_TRUE(is_constant(conserved_via_potential(y, s, qdp) - P(b.pend, "p_phi"), *b.pend.space, s.probe_config()).constant);
  EXPECT_THROW(conserved_via_potential(y, s, liouville_form(b.pend.space)), PreconditionError);

  const auto& is = b.iso.sys();
  KForm t = KForm::from_terms(b.iso.space, 1, {{P(b.iso, "-p1"), {0}}, {P(b.iso, "-p2"), {1}}});
  EXPECT_TRUE(is_constant(conserved_via_potential(is.x_h(), is, t) - is.h(), *b.iso.space, is.probe_config()).constant);
  EXPECT_TRUE(is_constant(conserved_via_potential(b.iso.candidate("X_h1").field, is, t) - P(b.iso, "(p1^2 + Omega^2*q1^2)/2"),
                          *b.iso.space, is.probe_config())
                  .constant);
}

TEST(Inverse, GenerateFromConserved) {
  const auto& b = bundled();
  const auto& ps = b.pend.sys();
  EXPECT_TRUE(is_zero(generate_from_conserved(P(b.pend, "p_phi"), ps).field - VectorField::coordinate(b.pend.space, 1),
                      ps.probe_config())
                  .symbolic());
  EXPECT_TRUE(is_zero(generate_from_conserved(ps.h(), ps).field - ps.x_h(), ps.probe_config()).zero());
  const auto& is = b.iso.sys();
  SymmetryCandidate y = generate_from_conserved(P(b.iso, "(p1^2 + Omega^2*q1^2)/2"), is);
  EXPECT_EQ(y.field.to_string(), "p1*d/dq1 - Omega^2*q1*d/dp1");
  EXPECT_THROW(generate_from_conserved(P(b.iso, "q1"), is), PreconditionError);
}

TEST(Action, NewConservedQuantities) {
  const auto& b = bundled();
  const auto& ps = b.pend.sys();
  ActionResult a = new_conserved_via_action(b.pend.candidate("Y").field, P(b.pend, "p_phi"), ps);
  EXPECT_FALSE(a.quantity.has_value());
  EXPECT_TRUE(a.trivial);
  const auto& is = b.iso.sys();
  ActionResult r = new_conserved_via_action(b.iso.candidate("Y1").field, P(b.iso, "p1*p2 + Omega^2*q1*q2"), is);
  ASSERT_TRUE(r.quantity.has_value());
  EXPECT_TRUE(same(*r.quantity, P(b.iso, "p2^2 + Omega^2*q2^2"), is));
  EXPECT_TRUE(new_conserved_via_action(b.iso.candidate("Y1").field, make_num(3), is).trivial);
  EXPECT_THROW(new_conserved_via_action(b.iso.candidate("Y1").field, P(b.iso, "q1"), is), PreconditionError);
}

TEST(Bracket, SymmetryClosure) {
  const auto& b = bundled();
  const auto& s = b.iso.sys();
  SymmetryCandidate z = symmetry_bracket(b.iso.candidate("X_h1"), b.iso.candidate("X_h2"), s);
  EXPECT_TRUE(is_zero(z.field, s.probe_config()).symbolic());
  EXPECT_TRUE(is_zero(symmetry_bracket(b.iso.candidate("Y"), b.iso.candidate("Y"), s).field, s.probe_config()).symbolic());
  SymmetryCandidate y12 = symmetry_bracket(b.iso.candidate("Y1"), b.iso.candidate("Y2"), s);
  EXPECT_TRUE(is_infinitesimal_symmetry(y12.field, s).zero());
  // Noether pair: the bracket preserves omega and h.
  SymmetryCandidate n = symmetry_bracket(b.iso.candidate("X_h1"), {"Y", s.x_h()}, s);
  EXPECT_TRUE(is_zero(lie_derivative(n.field, s.omega().form()), s.probe_config()).zero());
  EXPECT_TRUE(is_zero(n.field.apply(s.h()), s.probe_config()).zero());
  EXPECT_THROW(symmetry_bracket(b.iso.candidate("Z"), b.iso.candidate("Y"), s), PreconditionError);
}

}  // namespace
