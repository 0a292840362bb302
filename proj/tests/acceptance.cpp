// Acceptance run: one PASS/FAIL line per criterion, with timings. Exit status
// is nonzero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"

using namespace noether;
namespace fs = std::filesystem;

namespace {

/// Collects failed sub-checks of one criterion.
struct Checks {
  std::vector<std::string> failed;
  void expect(bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  }
};

struct Criterion {
  std::string id;
  std::string title;
  double budget_s;  // <= 0: no runtime bound
  std::function<void(Checks&)> body;
};

bool literally_equal(const Expr& a, const Expr& b) { return compare(normalize(a), normalize(b)) == 0; }

double drift(const Expr& f, const Trajectory& tr, const std::vector<double>& params) {
  return check_conserved(f, tr, params).max_rel_drift;
}

std::string fmt(double x) { return format_double(x); }

// Lie derivative by the coordinate formula, independent of Cartan's formula:
// (L_X a)_I = X^m d_m a_I + sum_s sum_m a_(I with slot s -> m) d_(I_s) X^m.
KForm lie_by_components(const VectorField& x, const KForm& a) {
  const SpacePtr& s = a.space();
  auto value = [&](IndexTuple idx) -> Expr {
    auto [sorted, sign] = KForm::sort_with_sign(std::move(idx));
    if (sign == 0) return make_num(0);
    return make_num(Rational(sign)) * a.coefficient(sorted);
  };
  std::vector<std::pair<Expr, IndexTuple>> terms;
  for (const auto& idx : KForm::all_tuples(s->dim(), a.degree())) {
    std::vector<Expr> sum;
    for (int m = 0; m < s->dim(); ++m) sum.push_back(x[static_cast<std::size_t>(m)] * differentiate(a.coefficient(idx), m));
    for (std::size_t slot = 0; slot < idx.size(); ++slot)
      for (int m = 0; m < s->dim(); ++m) {
        IndexTuple j = idx;
        j[slot] = m;
        sum.push_back(value(j) * differentiate(x[static_cast<std::size_t>(m)], idx[slot]));
      }
    terms.emplace_back(make_add(std::move(sum)), idx);
  }
  return KForm::from_terms(s, a.degree(), terms);
}

std::string run_cli(const std::string& args) {
  const std::string cmd = std::string(NOETHER_CLI) + " " + args + " 2>&1";
  std::string out;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  const int status = ::pclose(p);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) out += "\n<exit " + std::to_string(WEXITSTATUS(status)) + ">";
  return out;
}

// ---------------------------------------------------------------------------

void criterion_1(Checks& c) {
  SystemFile f = load_bundled("pendulum.sys");
  ClassificationReport r = classify(f.candidate("Y"), f.sys());
  c.expect(r.label.kind == LabelKind::Noether, "label is " + r.label.to_string());
  const Expr p_phi = parse("p_phi", *f.space);
  c.expect(r.conserved.size() == 1 && r.conserved[0].expr && literally_equal(*r.conserved[0].expr, p_phi),
           "conserved quantity is not exactly p_phi");
  const std::vector<double> params{1.0};
  Trajectory tr = integrate(f.sys(), params, {0.3, 0, 0, 0.5}, 10.0, 1e-3, Method::Rk4);
  const double d = drift(p_phi, tr, params);
  c.expect(!tr.truncated && d < 1e-6, "p_phi relative drift " + fmt(d));
}

void criterion_2(Checks& c) {
  SystemFile f = load_bundled("aniso_oscillator.sys");
  const auto& s = f.sys();
  for (int i = 1; i <= 2; ++i) {
    const std::string name = "Y" + std::to_string(i);
    const VectorField& y = f.candidate(name).field;
    ClassificationReport r = classify(f.candidate(name), s);
    c.expect(r.label.kind == LabelKind::GeometricNonHamiltonian, name + " label is " + r.label.to_string());
    c.expect(is_zero(lie_derivative(y, s.omega().form()), s.probe_config()).symbolic(), name + ": L(Y)omega not SymbolicZero");
    const Expr lh = normalize(y.apply(s.h()));
    const Expr expected = normalize(-f.space->param("Omega" + std::to_string(i)));
    c.expect(literally_equal(lh, expected),
             name + ": L(Y)h normalizes to " + to_string(lh) + ", not " + to_string(expected));
    c.expect(!r.conserved.empty() && r.conserved[0].trivial, name + ": conserved quantity not flagged trivial");
  }
}

void criterion_3a(Checks& c) {
  SystemFile f = load_bundled("iso_oscillator.sys");
  const auto& s = f.sys();
  const VectorField& y = f.candidate("Y").field;
  ClassificationReport r = classify(f.candidate("Y"), s);
  c.expect(r.label.kind == LabelKind::OmegaEigenOrderN && r.label.order == 2 && r.label.value &&
               literally_equal(*r.label.value, make_num(4)),
           "label is " + r.label.to_string());
  const Expr fq = parse("p1*p2 + Omega^2*q1*q2", *f.space);
  c.expect(!r.conserved.empty() && r.conserved[0].expr && literally_equal(*r.conserved[0].expr, fq),
           "first conserved quantity is not p1*p2 + Omega^2*q1*q2");
  const auto params = f.space->parameter_values();
  Trajectory tr = integrate(s, params, f.verify->x0, 10.0, 1e-3, Method::Rk4);
  const double d = drift(fq, tr, params);
  c.expect(d < 1e-6, "f relative drift " + fmt(d));
  const Expr lf = normalize(y.apply(fq));
  c.expect(literally_equal(lf, make_num(4) * s.h()), "L(Y)f normalizes to " + to_string(lf) + ", not 4h");
}

void criterion_3b(Checks& c) {
  SystemFile f = load_bundled("iso_oscillator.sys");
  const auto& s = f.sys();
  const VectorField& y1 = f.candidate("Y1").field;
  const Expr fq = parse("p1*p2 + Omega^2*q1*q2", *f.space);
  const Expr h1 = parse("(p1^2 + Omega^2*q1^2)/2", *f.space), h2 = parse("(p2^2 + Omega^2*q2^2)/2", *f.space);
  FormTower t(y1, s);
  c.expect(literally_equal(t.h(1), fq), "L(Y1)h = " + to_string(t.h(1)));
  c.expect(literally_equal(t.h(2), make_num(2) * h1), "L^2(Y1)h normalizes to " + to_string(t.h(2)) + ", not 2h1");
  c.expect(is_zero(t.h(3), s.probe_config()).symbolic(), "L^3(Y1)h not SymbolicZero");
  c.expect(is_zero(t.omega(3), s.probe_config()).zero(), "L^3(Y1)omega not zero");
  const auto params = f.space->parameter_values();
  Trajectory tr = integrate(s, params, f.verify->x0, 10.0, 1e-3, Method::Rk4);
  for (const auto& [name, q] : {std::pair{"f", fq}, std::pair{"h1", h1}, std::pair{"h2", h2}}) {
    const double d = drift(q, tr, params);
    c.expect(d < 1e-6, std::string(name) + " relative drift " + fmt(d));
  }
}

void criterion_3c(Checks& c) {
  SystemFile f = load_bundled("iso_oscillator.sys");
  const auto& s = f.sys();
  SymmetryCandidate y = generate_from_conserved(parse("(p1^2 + Omega^2*q1^2)/2", *f.space), s);
  const std::vector<Expr> want{parse("p1", *f.space), make_num(0), parse("-Omega^2*q1", *f.space), make_num(0)};
  bool exact = true;
  for (std::size_t i = 0; i < want.size(); ++i) exact = exact && literally_equal(y.field[i], want[i]);
  c.expect(exact, "got " + y.field.to_string());
}

void criterion_4(Checks& c) {
  auto space = noether::testing::oscillator_space();
  auto cfg = ProbeConfig::for_space(*space);
  noether::testing::RandomExpr gen(space, 2024);
  int dd = 0, cartan = 0, jacobi = 0, wedge_fail = 0;
  for (int k = 0; k < 200; ++k) {
    KForm a = gen.form(gen.pick(3), 0.5);
    if (!is_zero(exterior_derivative(exterior_derivative(a)), cfg).zero()) ++dd;

    VectorField x = gen.field();
    KForm b = gen.form(gen.pick(3), 0.5);
    if (!is_zero(lie_derivative(x, b) - lie_by_components(x, b), cfg).zero()) ++cartan;

    VectorField u = gen.field(), v = gen.field(), w = gen.field();
    if (!is_zero(lie_bracket(lie_bracket(u, v), w) + lie_bracket(lie_bracket(v, w), u) + lie_bracket(lie_bracket(w, u), v), cfg)
             .zero())
      ++jacobi;

    const int da = 1 + gen.pick(2), db = 1 + gen.pick(2);
    KForm p = gen.form(da, 0.4), q = gen.form(db, 0.4);
    if (!is_zero(wedge(p, q) - make_num((da * db) % 2 ? -1 : 1) * wedge(q, p), cfg).zero()) ++wedge_fail;
  }
  c.expect(dd == 0, std::to_string(dd) + " d(d a) failures");
  c.expect(cartan == 0, std::to_string(cartan) + " Cartan failures");
  c.expect(jacobi == 0, std::to_string(jacobi) + " Jacobi failures");
  c.expect(wedge_fail == 0, std::to_string(wedge_fail) + " graded antisymmetry failures");
}

void criterion_5(Checks& c) {
  int pairs = 0;
  for (const auto& b : bundled_systems()) {
    SystemFile f = load_bundled(b.filename);
    const auto& s = f.sys();
    const auto& cfg = s.probe_config();
    for (const auto& cand : f.candidates) {
      if (!is_infinitesimal_symmetry(cand.field, s).zero()) continue;
      ++pairs;
      const VectorField& y = cand.field;
      FormTower t(y, s);
      for (int j = 0; j <= 3; ++j) {
        const std::string at = std::string(b.filename) + "/" + cand.name + " j=" + std::to_string(j) + ": ";
        c.expect(is_zero(interior_product(y, t.theta(j)), cfg).zero(), at + "i(Y)theta_j != 0");
        c.expect(is_zero(t.theta(j + 1) - lie_derivative(y, t.theta(j)), cfg).zero(), at + "theta_(j+1) != L(Y)theta_j");
        c.expect(is_zero(t.theta(j + 1) - interior_product(y, exterior_derivative(t.theta(j))), cfg).zero(),
                 at + "theta_(j+1) != i(Y)d theta_j");
        c.expect(is_zero(exterior_derivative(t.theta(j)) - t.omega(j + 1), cfg).zero(), at + "d theta_j != L^(j+1)(Y)omega");
        c.expect(is_zero(lie_derivative(s.x_h(), t.theta(j)), cfg).zero(), at + "L(X_h)theta_j != 0");
        c.expect(is_zero(interior_product(s.x_h(), t.theta(j)).value() + t.h(j + 1), cfg).zero(),
                 at + "i(X_h)theta_j != -L^(j+1)(Y)h");
        c.expect(is_zero(interior_product(s.x_h(), exterior_derivative(t.theta(j))) - differential(f.space, t.h(j + 1)), cfg)
                     .zero(),
                 at + "i(X_h)d theta_j != d L^(j+1)(Y)h");
      }
    }
  }
  c.expect(pairs > 0, "no symmetric pairs found");
}

void criterion_6(Checks& c) {
  int noether_count = 0, emitted = 0;
  for (const auto& b : bundled_systems()) {
    SystemFile f = load_bundled(b.filename);
    const auto& s = f.sys();
    for (const auto& cand : f.candidates) {
      ClassificationReport r = classify(cand, s);
      c.expect(!r.inconsistent, std::string(b.filename) + "/" + cand.name + " inconsistent: " + r.inconsistency);
      for (const auto& q : r.conserved) {
        if (!q.expr) continue;
        ++emitted;
        c.expect(is_zero(s.x_h().apply(*q.expr), s.probe_config()).zero(),
                 std::string(b.filename) + "/" + cand.name + ": L(X_h)f != 0 for " + q.to_string());
      }
      if (r.label.kind != LabelKind::Noether) continue;
      ++noether_count;
      SymmetryCandidate back = generate_from_conserved(*r.conserved.at(0).expr, s);
      c.expect(is_zero(back.field - cand.field, s.probe_config()).zero(),
               std::string(b.filename) + "/" + cand.name + ": Y_fY = " + back.field.to_string());
    }
  }
  c.expect(noether_count > 0 && emitted > 0, "nothing to check");
}

void criterion_7(Checks& c) {
  SystemFile f = load_bundled("iso_oscillator.sys");
  const auto& s = f.sys();
  const std::vector<double> params{1.0}, x0{1, 0.5, 0.3, 1};
  const double coarse = drift(s.h(), integrate(s, params, x0, 10.0, 0.1, Method::Rk4), params);
  const double fine = drift(s.h(), integrate(s, params, x0, 10.0, 0.05, Method::Rk4), params);
  const double ratio = coarse / fine;
  c.expect(ratio >= 8.0 && ratio <= 32.0, "rk4 halving ratio " + fmt(ratio));
  const double mid = drift(s.h(), integrate(s, params, x0, 100.0, 1e-2, Method::ImplicitMidpoint), params);
  c.expect(mid < 1e-10, "implicit midpoint drift " + fmt(mid));
}

void criterion_8(Checks& c) {
  const fs::path dir = fs::temp_directory_path() / ("noether_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  const std::string install = run_cli("examples --install " + dir.string());
  c.expect(install.find("<exit") == std::string::npos, "examples install failed: " + install);
  for (const auto& b : bundled_systems()) {
    const std::string args = "--seed 42 --format structured classify " + (dir / b.filename).string();
    const std::string one = run_cli(args), two = run_cli(args);
    c.expect(one.find("<exit") == std::string::npos, std::string(b.filename) + ": classify failed");
    c.expect(!one.empty() && one == two, std::string(b.filename) + ": outputs differ");
  }
  fs::remove_all(dir);
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"1", "spherical pendulum: Noether, p_phi, drift", 5.0, criterion_1},
      {"2", "anisotropic oscillator: geometric symmetries, L(Y_i)h = -Omega_i", 5.0, criterion_2},
      {"3a", "isotropic oscillator Y: OmegaEigenOrderN{2,4}, f, L(Y)f = 4h", 10.0, criterion_3a},
      {"3b", "isotropic oscillator Y1: chain f, 2h1, 0; drifts", 10.0, criterion_3b},
      {"3c", "inverse Noether for h1", 10.0, criterion_3c},
      {"4", "exterior properties, 200 instances each", 60.0, criterion_4},
      {"5", "theta hierarchy identities, j <= 3", 0.0, criterion_5},
      {"6", "inverse Noether round trip and soundness gate", 0.0, criterion_6},
      {"7", "integrator order and midpoint invariant", 0.0, criterion_7},
      {"8", "structured output byte-identical across runs", 0.0, criterion_8},
  };
  int failures = 0;
  double crit3 = 0.0;
  for (const auto& cr : criteria) {
    Checks c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.body(c);
    } catch (const std::exception& e) {
      c.failed.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.id.starts_with("3")) crit3 += secs;
    if (cr.budget_s > 0 && !cr.id.starts_with("3") && secs >= cr.budget_s)
      c.failed.push_back("runtime " + fmt(secs) + " s over budget");
    if (cr.id == "3c" && crit3 >= cr.budget_s) c.failed.push_back("criterion 3 runtime " + fmt(crit3) + " s over budget");
    const bool pass = c.failed.empty();
    failures += pass ? 0 : 1;
    std::printf("criterion %-3s %s  (%.3f s)  %s", cr.id.c_str(), pass ? "PASS" : "FAIL", secs, cr.title.c_str());
    for (const auto& f : c.failed) std::printf("\n    - %s", f.c_str());
    std::printf("\n");
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
