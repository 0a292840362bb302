// Command-line front end: check, classify, verify, examples.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "noether/report.hpp"

namespace fs = std::filesystem;
using namespace noether;

namespace {

constexpr int kOk = 0;
constexpr int kSemantic = 1;
constexpr int kInput = 2;

struct Options {
  RunSettings run;
  std::string format = "text";
  std::string file;
  std::string symmetry;
  std::vector<std::string> quantities;
  std::vector<double> x0;
  double t_final = -1.0;
  double dt = -1.0;
  std::string method;
  double drift_tol = 1e-6;
  std::string dump;
  std::string install_dir;
};

SystemFile load(const Options& o) { return load_system_file(o.file, o.run.seed, o.run.probes, o.run.tol); }

std::vector<const SymmetryCandidate*> selected(const SystemFile& f, const Options& o) {
  std::vector<const SymmetryCandidate*> out;
  if (!o.symmetry.empty()) {
    out.push_back(&f.candidate(o.symmetry));
  } else {
    for (const auto& c : f.candidates) out.push_back(&c);
  }
  return out;
}

int cmd_check(const Options& o) {
  SystemFile f = load(o);
  if (o.format == "structured") {
    ordered_json j;
    j["tool_version"] = kToolVersion;
    j["seed"] = o.run.seed;
    j["system"] = system_json(f);
    j["candidates"] = ordered_json::array();
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << equations_text(f);
    std::cout << "symplectic form: closed, nondegenerate at probes\n";
  }
  return kOk;
}

int cmd_classify(const Options& o) {
  SystemFile f = load(o);
  std::vector<ClassificationReport> reports;
  for (const auto* c : selected(f, o)) reports.push_back(classify(*c, f.sys(), o.run.max_order));
  bool bad = false;
  for (const auto& r : reports) bad = bad || r.inconsistent;
  if (o.format == "structured") {
    std::cout << document_json(f, o.run, reports).dump(2) << '\n';
  } else {
    for (const auto& r : reports) std::cout << report_text(r);
  }
  return bad ? kSemantic : kOk;
}

int cmd_verify(const Options& o) {
  SystemFile f = load(o);
  VerifyBlock vb = f.verify.value_or(VerifyBlock{});
  if (!o.x0.empty()) vb.x0 = o.x0;
  if (o.t_final >= 0.0) vb.t_final = o.t_final;
  if (o.dt > 0.0) vb.dt = o.dt;
  if (!o.method.empty()) vb.method = parse_method(o.method);
  if (static_cast<int>(vb.x0.size()) != f.space->dim())
    throw ValidationError("no initial state: give a verify block in the file or --x0 with 2n values");
  const auto params = f.space->parameter_values();
  const Trajectory tr = integrate(f.sys(), params, vb.x0, vb.t_final, vb.dt, vb.method);
  if (!o.dump.empty()) {
    std::ofstream out(o.dump);
    if (!out) throw ValidationError("cannot write '" + o.dump + "'");
    write_trajectory(out, tr, f.space->coordinate_names());
  }
  bool ok = !tr.truncated;
  auto drift_line = [&](const std::string& id, const ScalarFunction& fn) {
    NumericCheck c;
    c.quantity = id;
    try {
      DriftReport d = check_conserved(id, fn, tr, params);
      c.max_relative_drift = d.max_rel_drift;
      c.pass = d.max_rel_drift < o.drift_tol && !tr.truncated;
      if (tr.truncated) c.note = "trajectory truncated: " + tr.diagnostic;
    } catch (const DomainError& e) {
      c.note = std::string("evaluation failed: ") + e.what();
    }
    ok = ok && c.pass;
    return c;
  };
  auto expr_fn = [](const Expr& e) -> ScalarFunction {
    return [e](std::span<const double> x, std::span<const double> p) { return eval(e, {x, p}); };
  };

  std::vector<ClassificationReport> reports;
  if (!o.quantities.empty()) {
    ClassificationReport r;
    r.candidate = "user";
    r.label.reason = "user-supplied quantities";
    for (const auto& q : o.quantities) {
      const Expr e = parse(q, *f.space);
      r.verification.push_back(drift_line(q, expr_fn(e)));
    }
    reports.push_back(std::move(r));
  } else {
    for (const auto* c : selected(f, o)) {
      ClassificationReport r = classify(*c, f.sys(), o.run.max_order);
      ok = ok && !r.inconsistent;
      for (const auto& q : r.conserved) {
        r.verification.push_back(drift_line(q.name + " = " + q.to_string(),
                                            [&q](std::span<const double> x, std::span<const double> p) { return q(x, p); }));
      }
      reports.push_back(std::move(r));
    }
  }
  const NumericCheck energy = drift_line("h", expr_fn(f.sys().h()));

  if (o.format == "structured") {
    ordered_json j = document_json(f, o.run, reports);
    j["integration"] = {{"method", to_string(vb.method)},  {"dt", vb.dt},
                        {"t_final", vb.t_final},           {"x0", vb.x0},
                        {"truncated", tr.truncated},       {"diagnostic", tr.diagnostic},
                        {"drift_tolerance", o.drift_tol},  {"energy_relative_drift", energy.max_relative_drift}};
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "integrated with " << to_string(vb.method) << ", dt = " << format_double(vb.dt)
              << ", t = " << format_double(vb.t_final) << (tr.truncated ? " (truncated: " + tr.diagnostic + ")" : "")
              << '\n';
    std::cout << "drift h: " << format_double(energy.max_relative_drift) << (energy.pass ? " ok" : " FAIL") << '\n';
    for (const auto& r : reports) {
      if (o.quantities.empty()) {
        std::cout << report_text(r, false);
      } else {
        for (const auto& v : r.verification)
          std::cout << "drift " << v.quantity << ": " << format_double(v.max_relative_drift)
                    << (v.pass ? " ok" : " FAIL") << (v.note.empty() ? "" : " (" + v.note + ")") << '\n';
      }
    }
  }
  return ok ? kOk : kSemantic;
}

int cmd_examples(const Options& o) {
  std::error_code ec;
  fs::create_directories(o.install_dir, ec);
  for (const auto& b : bundled_systems()) {
    const fs::path p = fs::path(o.install_dir) / b.filename;
    std::ofstream out(p, std::ios::trunc);
    if (!out || !(out << b.contents) || !out.flush()) {
      std::cerr << "error: cannot write " << p.string() << '\n';
      return kInput;
    }
    std::cout << "wrote " << p.string() << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classify symmetries of Hamiltonian systems and derive conserved quantities"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--seed", o.run.seed, "Probe seed")->capture_default_str();
  app.add_option("--tol", o.run.tol, "Zero-test tolerance")->capture_default_str();
  app.add_option("--probes", o.run.probes, "Probe points per zero test")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--max-order", o.run.max_order, "Highest Lie-derivative order examined")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "structured"}))->capture_default_str();

  auto* check = app.add_subcommand("check", "Validate a system file and print Hamilton's equations");
  check->add_option("file", o.file, "System file")->required();
  check->fallthrough();

  auto* cls = app.add_subcommand("classify", "Classify candidate symmetries");
  cls->add_option("file", o.file, "System file")->required();
  cls->add_option("--symmetry", o.symmetry, "Only this candidate");
  cls->fallthrough();

  auto* ver = app.add_subcommand("verify", "Integrate and measure drift of conserved quantities");
  ver->add_option("file", o.file, "System file")->required();
  ver->add_option("--symmetry", o.symmetry, "Only this candidate");
  ver->add_option("--quantity", o.quantities, "Expression to check instead of classifier output (repeatable)")
      ->allow_extra_args(false);
  ver->add_option("--x0", o.x0, "Initial state, 2n comma-separated values")->delimiter(',')->allow_extra_args(false);
  ver->add_option("--t-final", o.t_final, "Final time");
  ver->add_option("--dt", o.dt, "Step size");
  ver->add_option("--method", o.method, "rk4 or implicit_midpoint");
  ver->add_option("--drift-tol", o.drift_tol, "Relative drift threshold")->capture_default_str();
  ver->add_option("--dump", o.dump, "Write the trajectory table to this path");
  ver->fallthrough();

  auto* ex = app.add_subcommand("examples", "Write the bundled system files");
  ex->add_option("--install", o.install_dir, "Target directory")->required();
  ex->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  try {
    if (check->parsed()) return cmd_check(o);
    if (cls->parsed()) return cmd_classify(o);
    if (ver->parsed()) return cmd_verify(o);
    if (ex->parsed()) return cmd_examples(o);
  } catch (const ParseError& e) {
    std::cerr << "syntax error: " << e.what() << '\n';
    return kInput;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInput;
  } catch (const PreconditionError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSemantic;
  }
  return kInput;
}
