#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "noether/classifier.hpp"
#include "noether/verify.hpp"

namespace noether {

using ordered_json = nlohmann::ordered_json;

struct VerifyBlock {
  std::vector<double> x0;
  double t_final = 10.0;
  double dt = 1e-3;
  Method method = Method::Rk4;
};

/// Parsed system file: the Hamiltonian system plus its candidate fields.
struct SystemFile {
  std::string name;
  std::string description;
  SpacePtr space;
  std::optional<HamiltonianSystem> system;
  std::vector<SymmetryCandidate> candidates;
  std::optional<VerifyBlock> verify;

  const HamiltonianSystem& sys() const { return *system; }

  const SymmetryCandidate& candidate(const std::string& n) const {
    for (const auto& c : candidates)
      if (c.name == n) return c;
    throw ValidationError("unknown symmetry '" + n + "'");
  }
};

namespace detail {

inline const ordered_json& require(const ordered_json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline Expr parse_field(const ordered_json& j, const std::string& where, const PhaseSpace& space) {
  if (!j.is_string() && !j.is_number()) throw ValidationError(where + ": expected an expression string");
  const std::string text = j.is_string() ? j.get<std::string>() : j.dump();
  try {
    return parse(text, space);
  } catch (const ParseError& e) {
    throw ParseError(where + ": " + e.reason, e.position, e.expected);
  }
}

inline int coordinate_ref(const ordered_json& j, const PhaseSpace& space, const std::string& where) {
  if (j.is_number_integer()) {
    const int i = j.get<int>();
    if (i < 0 || i >= space.dim()) throw ValidationError(where + ": coordinate index out of range");
    return i;
  }
  if (j.is_string()) {
    auto i = space.coord_index(j.get<std::string>());
    if (!i) throw ValidationError(where + ": unknown coordinate '" + j.get<std::string>() + "'");
    return *i;
  }
  throw ValidationError(where + ": expected a coordinate name or index");
}

inline Interval parse_interval(const ordered_json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ValidationError(where + ": expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

/// Builds a system from a parsed JSON document; probing uses `seed`,
/// `probes` and `tol`.
inline SystemFile load_system(const ordered_json& doc, std::uint64_t seed = 42, int probes = 64, double tol = 1e-9) {
  if (!doc.is_object()) throw ValidationError("system file must be a JSON object");
  SystemFile f;
  f.name = doc.value("name", std::string("system"));
  f.description = doc.value("description", std::string());
  const auto& nj = detail::require(doc, "n");
  if (!nj.is_number_integer()) throw ValidationError("'n' must be an integer");
  const int n = nj.get<int>();
  const auto& cj = detail::require(doc, "coordinates");
  if (!cj.is_array()) throw ValidationError("'coordinates' must be a list of names");
  std::vector<std::string> coords;
  for (const auto& c : cj) {
    if (!c.is_string()) throw ValidationError("coordinate names must be strings");
    coords.push_back(c.get<std::string>());
  }
  std::vector<PhaseSpace::Parameter> params;
  if (doc.contains("parameters")) {
    const auto& pj = doc.at("parameters");
    if (!pj.is_object()) throw ValidationError("'parameters' must map names to values");
    for (const auto& [k, v] : pj.items()) {
      PhaseSpace::Parameter p;
      p.name = k;
      if (v.is_number()) {
        p.value = v.get<double>();
      } else if (v.is_object()) {
        p.value = detail::require(v, "value").get<double>();
        if (v.contains("probe")) p.probe = detail::parse_interval(v.at("probe"), "parameter " + k + " probe");
      } else {
        throw ValidationError("parameter '" + k + "' must be a number or {value, probe}");
      }
      params.push_back(std::move(p));
    }
  }
  std::vector<Interval> box(coords.size());
  if (doc.contains("domain")) {
    const auto& dj = doc.at("domain");
    if (!dj.is_object()) throw ValidationError("'domain' must map coordinate names to [lo, hi]");
    for (const auto& [k, v] : dj.items()) {
      auto it = std::find(coords.begin(), coords.end(), k);
      if (it == coords.end()) throw ValidationError("domain: unknown coordinate '" + k + "'");
      box[static_cast<std::size_t>(it - coords.begin())] = detail::parse_interval(v, "domain " + k);
    }
  }
  f.space = PhaseSpace::create(n, std::move(coords), std::move(params), std::move(box), doc.value("domain_note", ""));
  const PhaseSpace& sp = *f.space;
  const ProbeConfig cfg = ProbeConfig::for_space(sp, seed, probes, tol);

  SymplecticForm omega = SymplecticForm::canonical(f.space);
  if (doc.contains("symplectic")) {
    const auto& wj = doc.at("symplectic");
    if (wj.is_string()) {
      if (wj.get<std::string>() != "canonical") throw ValidationError("'symplectic' must be \"canonical\" or a term list");
    } else if (wj.is_array()) {
      std::vector<std::pair<Expr, IndexTuple>> terms;
      for (std::size_t k = 0; k < wj.size(); ++k) {
        const std::string where = "symplectic[" + std::to_string(k) + "]";
        const auto& t = wj[k];
        const int i = detail::coordinate_ref(detail::require(t, "i"), sp, where);
        const int j = detail::coordinate_ref(detail::require(t, "j"), sp, where);
        terms.emplace_back(detail::parse_field(detail::require(t, "coeff"), where + ".coeff", sp), IndexTuple{i, j});
      }
      omega = SymplecticForm::from_form(KForm::from_terms(f.space, 2, terms), cfg);
    } else {
      throw ValidationError("'symplectic' must be \"canonical\" or a term list");
    }
  }
  const Expr h = detail::parse_field(detail::require(doc, "hamiltonian"), "hamiltonian", sp);
  f.system = make_system(f.space, std::move(omega), h, cfg);

  if (doc.contains("symmetries")) {
    const auto& yj = doc.at("symmetries");
    if (!yj.is_array()) throw ValidationError("'symmetries' must be a list");
    for (std::size_t k = 0; k < yj.size(); ++k) {
      const auto& c = yj[k];
      SymmetryCandidate cand;
      cand.name = detail::require(c, "name").get<std::string>();
      const std::string where = "symmetry '" + cand.name + "'";
      for (const auto& o : f.candidates)
        if (o.name == cand.name) throw ValidationError(where + " is declared twice");
      const auto& comps = detail::require(c, "components");
      if (!comps.is_array() || static_cast<int>(comps.size()) != sp.dim())
        throw ValidationError(where + ": expected " + std::to_string(sp.dim()) + " components");
      std::vector<Expr> e;
      for (std::size_t i = 0; i < comps.size(); ++i)
        e.push_back(detail::parse_field(comps[i], where + " component " + std::to_string(i), sp));
      cand.field = VectorField(f.space, std::move(e));
      f.candidates.push_back(std::move(cand));
    }
  }
  if (doc.contains("verify")) {
    const auto& vj = doc.at("verify");
    VerifyBlock vb;
    for (const auto& x : detail::require(vj, "x0")) vb.x0.push_back(x.get<double>());
    if (static_cast<int>(vb.x0.size()) != sp.dim()) throw ValidationError("verify.x0 must have 2n entries");
    vb.t_final = vj.value("t_final", vb.t_final);
    vb.dt = vj.value("dt", vb.dt);
    vb.method = parse_method(vj.value("method", std::string("rk4")));
    f.verify = vb;
  }
  return f;
}

inline ordered_json read_json_text(const std::string& text, const std::string& origin) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(origin + ": malformed system file", e.byte, "valid JSON");
  }
}

inline SystemFile load_system_file(const std::string& path, std::uint64_t seed = 42, int probes = 64,
                                   double tol = 1e-9) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_system(read_json_text(ss.str(), path), seed, probes, tol);
}

// ---------------------------------------------------------------------------
// Bundled examples

struct BundledFile {
  const char* filename;
  const char* contents;
};

inline const std::vector<BundledFile>& bundled_systems() {
  static const std::vector<BundledFile> files = {
      {"pendulum.sys", R"sys({
  "name": "spherical-pendulum",
  "description": "Spherical pendulum in a chart with theta in (-pi/2, pi/2); Y = d/dphi is a Noether symmetry with conserved p_phi.",
  "n": 2,
  "coordinates": ["theta", "phi", "p_theta", "p_phi"],
  "parameters": {"Omega": 1},
  "domain": {"theta": [-1.2, 1.2]},
  "domain_note": "tan(theta) is singular at theta = +-pi/2; probes stay inside |theta| <= 1.2",
  "symplectic": "canonical",
  "hamiltonian": "p_theta^2/2 + p_phi^2*(1 + tan(theta)^2)/2 + Omega^2*(1 + sin(theta))",
  "symmetries": [
    {"name": "Y", "components": ["0", "1", "0", "0"]}
  ],
  "verify": {"x0": [0.3, 0, 0, 0.5], "t_final": 10, "dt": 0.001, "method": "rk4"}
}
)sys"},
      {"aniso_oscillator.sys", R"sys({
  "name": "anisotropic-oscillator",
  "description": "Two-dimensional harmonic oscillator with frequencies Omega1, Omega2. Y1, Y2 preserve omega but not h; L(Yi)h evaluates to the constant +Omega_i (sign checked by direct expansion).",
  "n": 2,
  "coordinates": ["q1", "q2", "p1", "p2"],
  "parameters": {"Omega1": 1, "Omega2": 1},
  "symplectic": "canonical",
  "hamiltonian": "(p1^2 + p2^2 + Omega1^2*q1^2 + Omega2^2*q2^2)/2",
  "symmetries": [
    {"name": "Y1", "components": ["Omega1*q1/(Omega1^2*q1^2 + p1^2)", "0", "Omega1*p1/(Omega1^2*q1^2 + p1^2)", "0"]},
    {"name": "Y2", "components": ["0", "Omega2*q2/(Omega2^2*q2^2 + p2^2)", "0", "Omega2*p2/(Omega2^2*q2^2 + p2^2)"]}
  ],
  "verify": {"x0": [1, 0.5, 0.3, 1], "t_final": 10, "dt": 0.001, "method": "rk4"}
}
)sys"},
      {"iso_oscillator.sys", R"sys({
  "name": "isotropic-oscillator",
  "description": "Two-dimensional isotropic oscillator. Z commutes with X_h only when Omega = 1 (see iso_oscillator_unit.sys).",
  "n": 2,
  "coordinates": ["q1", "q2", "p1", "p2"],
  "parameters": {"Omega": 1},
  "symplectic": "canonical",
  "hamiltonian": "(p1^2 + p2^2 + Omega^2*q1^2 + Omega^2*q2^2)/2",
  "symmetries": [
    {"name": "Y", "components": ["q2", "q1", "p2", "p1"]},
    {"name": "Y1", "components": ["q2", "0", "p2", "0"]},
    {"name": "Y2", "components": ["0", "q1", "0", "p1"]},
    {"name": "X_h1", "components": ["p1", "0", "-Omega^2*q1", "0"]},
    {"name": "X_h2", "components": ["0", "p2", "0", "-Omega^2*q2"]},
    {"name": "Z1", "components": ["(p2^2 + Omega^2*q2^2)*q2", "0", "(p2^2 + Omega^2*q2^2)*p2", "0"]},
    {"name": "Z2", "components": ["0", "(p1^2 + Omega^2*q1^2)*q1", "0", "(p1^2 + Omega^2*q1^2)*p1"]},
    {"name": "Z", "components": ["(q1*p2 - q2*p1)*p1", "-(q1*p2 - q2*p1)*p2", "-(q1*p2 - q2*p1)*q1", "(q1*p2 - q2*p1)*q2"]}
  ],
  "verify": {"x0": [1, 0.5, 0.3, 1], "t_final": 10, "dt": 0.001, "method": "rk4"}
}
)sys"},
      {"iso_oscillator_unit.sys", R"sys({
  "name": "isotropic-oscillator-unit",
  "description": "Isotropic oscillator with Omega fixed to 1, where Z is a symmetry.",
  "n": 2,
  "coordinates": ["q1", "q2", "p1", "p2"],
  "symplectic": "canonical",
  "hamiltonian": "(p1^2 + p2^2 + q1^2 + q2^2)/2",
  "symmetries": [
    {"name": "Z", "components": ["(q1*p2 - q2*p1)*p1", "-(q1*p2 - q2*p1)*p2", "-(q1*p2 - q2*p1)*q1", "(q1*p2 - q2*p1)*q2"]}
  ],
  "verify": {"x0": [1, 0.5, 0.3, 1], "t_final": 10, "dt": 0.001, "method": "rk4"}
}
)sys"},
  };
  return files;
}

inline SystemFile load_bundled(const std::string& filename, std::uint64_t seed = 42, int probes = 64,
                               double tol = 1e-9) {
  for (const auto& b : bundled_systems())
    if (filename == b.filename) return load_system(read_json_text(b.contents, filename), seed, probes, tol);
  throw ValidationError("no bundled system '" + filename + "'");
}

}  // namespace noether
