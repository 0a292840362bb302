#pragma once

#include <cstdio>
#include <sstream>
#include <string>

#include "noether/sysfile.hpp"

namespace noether {

inline constexpr const char* kToolVersion = "0.1.0";

/// Short tag naming the result each label rests on.
inline const char* rule_tag(LabelKind k) {
  switch (k) {
    case LabelKind::Noether: return "noether";
    case LabelKind::GeometricNonHamiltonian: return "geometric-symmetry";
    case LabelKind::ConformalSymplectic: return "conformal-symplectic";
    case LabelKind::BiHamiltonian: return "bihamiltonian";
    case LabelKind::HigherOrderNoether: return "higher-order-noether";
    case LabelKind::FunctionCoefficients: return "function-coefficients";
    case LabelKind::ConstantCoefficientsC0Zero: return "constant-coefficients-c0-zero";
    case LabelKind::ConstantCoefficientsC0Nonzero: return "constant-coefficients-c0-nonzero";
    case LabelKind::OmegaEigenOrderN: return "omega-eigen";
    case LabelKind::NotASymmetry:
    case LabelKind::Inconclusive: return "none";
  }
  return "none";
}

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

inline ordered_json label_json(const ClassificationLabel& l) {
  ordered_json j;
  j["kind"] = to_string(l.kind);
  switch (l.kind) {
    case LabelKind::GeometricNonHamiltonian:
    case LabelKind::ConformalSymplectic: j["value"] = to_string(*l.value); break;
    case LabelKind::OmegaEigenOrderN:
      j["N"] = l.order;
      j["C"] = to_string(*l.value);
      break;
    case LabelKind::HigherOrderNoether: j["N"] = l.order; break;
    case LabelKind::FunctionCoefficients:
    case LabelKind::ConstantCoefficientsC0Zero:
    case LabelKind::ConstantCoefficientsC0Nonzero: {
      j["N"] = l.order;
      ordered_json c = ordered_json::array();
      for (const auto& e : l.coefficients) c.push_back(to_string(e));
      j["coefficients"] = c;
      break;
    }
    case LabelKind::Inconclusive: j["reason"] = l.reason; break;
    default: break;
  }
  return j;
}

inline ordered_json trace_json(const std::vector<TraceStep>& t) {
  ordered_json a = ordered_json::array();
  for (const auto& s : t) a.push_back({{"step", s.step}, {"rule", s.rule}, {"object", s.object}});
  return a;
}

inline ordered_json certificates_json(const std::vector<Certificate>& c) {
  ordered_json a = ordered_json::array();
  for (const auto& x : c) a.push_back({{"claim", x.claim}, {"evidence", to_string(x.kind)}});
  return a;
}

inline ordered_json report_json(const ClassificationReport& r) {
  ordered_json j;
  j["name"] = r.candidate;
  j["label"] = label_json(r.label);
  j["rule"] = rule_tag(r.label.kind);
  ordered_json qs = ordered_json::array();
  for (const auto& q : r.conserved) {
    ordered_json o;
    o["name"] = q.name;
    o["expr"] = q.to_string();
    o["symbolic"] = q.is_symbolic();
    o["trivial"] = q.trivial;
    o["derivation"] = trace_json(q.derivation);
    o["certificate"] = certificates_json(q.certificate);
    qs.push_back(o);
  }
  j["conserved"] = qs;
  if (r.bihamiltonian_pair) {
    j["bihamiltonian"] = {{"omega2", r.bihamiltonian_pair->first.to_string()},
                          {"alpha2", r.bihamiltonian_pair->second.to_string()},
                          {"valid", r.bihamiltonian_check->ok},
                          {"reason", r.bihamiltonian_check->reason}};
  }
  ordered_json tower = ordered_json::array();
  for (const auto& w : r.omega_tower) tower.push_back(w.to_string());
  j["omega_tower"] = tower;
  ordered_json thetas = ordered_json::array();
  for (const auto& t : r.theta_forms) thetas.push_back(t.to_string());
  j["theta_forms"] = thetas;
  j["trace"] = trace_json(r.trace);
  j["certificates"] = certificates_json(r.certificates);
  j["numeric_evidence"] = r.numeric_evidence();
  j["inconsistent"] = r.inconsistent;
  if (r.inconsistent) j["inconsistency"] = r.inconsistency;
  if (!r.verification.empty()) {
    ordered_json v = ordered_json::array();
    for (const auto& c : r.verification)
      v.push_back({{"quantity", c.quantity}, {"max_relative_drift", c.max_relative_drift}, {"pass", c.pass}, {"note", c.note}});
    j["verification"] = v;
  }
  return j;
}

struct RunSettings {
  std::uint64_t seed = 42;
  double tol = 1e-9;
  int probes = 64;
  int max_order = 6;
};

inline ordered_json system_json(const SystemFile& f) {
  ordered_json s;
  s["name"] = f.name;
  s["coordinates"] = f.space->coordinate_names();
  ordered_json params = ordered_json::object();
  for (const auto& p : f.space->parameters()) params[p.name] = p.value;
  s["parameters"] = params;
  s["symplectic"] = f.sys().omega().form().to_string();
  s["hamiltonian"] = to_string(f.sys().h());
  ordered_json eq = ordered_json::array();
  for (const auto& [name, rhs] : hamilton_equations(f.sys())) eq.push_back({{"coordinate", name}, {"rhs", to_string(rhs)}});
  s["hamilton_equations"] = eq;
  return s;
}

inline ordered_json document_json(const SystemFile& f, const RunSettings& s, const std::vector<ClassificationReport>& rs) {
  ordered_json j;
  j["tool_version"] = kToolVersion;
  j["seed"] = s.seed;
  j["settings"] = {{"tol", s.tol}, {"probes", s.probes}, {"max_order", s.max_order}};
  j["system"] = system_json(f);
  ordered_json c = ordered_json::array();
  for (const auto& r : rs) c.push_back(report_json(r));
  j["candidates"] = c;
  return j;
}

/// "Y: Noether [noether]; conserved: p_phi" followed by indented detail.
inline std::string report_text(const ClassificationReport& r, bool detail = true) {
  std::ostringstream os;
  os << r.candidate << ": " << r.label.to_string() << " [" << rule_tag(r.label.kind) << "]";
  if (!r.conserved.empty()) {
    const bool all_trivial = std::all_of(r.conserved.begin(), r.conserved.end(),
                                         [](const ConservedQuantity& q) { return q.trivial; });
    os << "; conserved" << (all_trivial ? " (trivial)" : "") << ": ";
    for (std::size_t i = 0; i < r.conserved.size(); ++i) {
      os << (i ? ", " : "") << r.conserved[i].to_string();
      if (r.conserved[i].trivial && !all_trivial) os << " (trivial)";
    }
  }
  os << '\n';
  if (r.inconsistent) os << "  INCONSISTENT: " << r.inconsistency << '\n';
  if (r.numeric_evidence()) os << "  note: some decisions rest on numeric probing only\n";
  if (r.bihamiltonian_check)
    os << "  second structure (L(Y)omega, dL(Y)h): "
       << (r.bihamiltonian_check->ok ? "valid" : "invalid (" + r.bihamiltonian_check->reason + ")") << '\n';
  if (detail) {
    for (const auto& c : r.certificates) os << "  [" << to_string(c.kind) << "] " << c.claim << '\n';
    for (const auto& q : r.conserved)
      for (const auto& s : q.derivation) os << "  " << q.name << ": " << s.step << " -> " << s.object << '\n';
  }
  for (const auto& v : r.verification)
    os << "  drift " << v.quantity << ": " << format_double(v.max_relative_drift) << (v.pass ? " ok" : " FAIL")
       << (v.note.empty() ? "" : " (" + v.note + ")") << '\n';
  return os.str();
}

inline std::string equations_text(const SystemFile& f) {
  std::ostringstream os;
  os << "system " << f.name << ": " << f.space->n() << " degrees of freedom\n";
  os << "omega = " << f.sys().omega().form().to_string() << '\n';
  os << "h = " << to_string(f.sys().h()) << '\n';
  os << "X_h = " << f.sys().x_h().to_string() << '\n';
  for (const auto& [name, rhs] : hamilton_equations(f.sys())) os << "d" << name << "/dt = " << to_string(rhs) << '\n';
  return os.str();
}

}  // namespace noether
