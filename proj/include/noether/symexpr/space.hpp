#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "noether/errors.hpp"
#include "noether/symexpr/expr.hpp"

namespace noether {

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
  double center() const { return 0.5 * (lo + hi); }
};

/// Darboux chart: n degrees of freedom, 2n coordinates (positions first,
/// then momenta) and named real parameters.
class PhaseSpace {
 public:
  struct Parameter {
    std::string name;
    double value = 1.0;
    Interval probe{0.5, 2.0};
  };

  static std::shared_ptr<const PhaseSpace> create(int n, std::vector<std::string> coords,
                                                  std::vector<Parameter> params = {},
                                                  std::vector<Interval> box = {},
                                                  std::string domain_note = {}) {
    if (n <= 0) throw ValidationError("degrees of freedom must be positive");
    if (static_cast<int>(coords.size()) != 2 * n)
      throw ValidationError("expected " + std::to_string(2 * n) + " coordinates, got " +
                            std::to_string(coords.size()));
    std::set<std::string> seen;
    for (const auto& c : coords) {
      if (!is_identifier(c)) throw ValidationError("invalid coordinate name '" + c + "'");
      if (is_reserved(c)) throw ValidationError("coordinate name '" + c + "' is a function name");
      if (!seen.insert(c).second) throw ValidationError("duplicate coordinate '" + c + "'");
    }
    for (const auto& p : params) {
      if (!is_identifier(p.name)) throw ValidationError("invalid parameter name '" + p.name + "'");
      if (is_reserved(p.name)) throw ValidationError("parameter name '" + p.name + "' is a function name");
      if (!seen.insert(p.name).second)
        throw ValidationError("parameter '" + p.name + "' clashes with another name");
      if (!(p.probe.lo < p.probe.hi)) throw ValidationError("empty probe range for '" + p.name + "'");
    }
    if (box.empty()) box.assign(coords.size(), Interval{});
    if (box.size() != coords.size()) throw ValidationError("domain box must cover every coordinate");
    for (const auto& b : box)
      if (!(b.lo < b.hi)) throw ValidationError("empty domain interval");
    auto s = std::shared_ptr<PhaseSpace>(new PhaseSpace());
    s->n_ = n;
    s->coords_ = std::move(coords);
    s->params_ = std::move(params);
    s->box_ = std::move(box);
    s->domain_note_ = std::move(domain_note);
    return s;
  }

  int n() const { return n_; }
  int dim() const { return 2 * n_; }
  const std::vector<std::string>& coordinate_names() const { return coords_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  const std::vector<Interval>& box() const { return box_; }
  const std::string& domain_note() const { return domain_note_; }

  std::vector<double> parameter_values() const {
    std::vector<double> v;
    for (const auto& p : params_) v.push_back(p.value);
    return v;
  }

  std::vector<double> box_center() const {
    std::vector<double> v;
    for (const auto& b : box_) v.push_back(b.center());
    return v;
  }

  std::optional<int> coord_index(const std::string& name) const {
    auto it = std::find(coords_.begin(), coords_.end(), name);
    if (it == coords_.end()) return std::nullopt;
    return static_cast<int>(it - coords_.begin());
  }

  std::optional<int> param_index(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name) return static_cast<int>(i);
    return std::nullopt;
  }

  /// Momenta sort before positions in printed sums (p1*p2 + Omega^2*q1*q2).
  Expr coord(int i) const {
    const int order = i >= n_ ? i - n_ : i + n_;
    return make_coord(i, order, coords_.at(static_cast<std::size_t>(i)));
  }
  Expr coord(const std::string& name) const {
    auto i = coord_index(name);
    if (!i) throw ValidationError("unknown coordinate '" + name + "'");
    return coord(*i);
  }
  Expr param(int i) const { return make_param(i, params_.at(static_cast<std::size_t>(i)).name); }
  Expr param(const std::string& name) const {
    auto i = param_index(name);
    if (!i) throw ValidationError("unknown parameter '" + name + "'");
    return param(*i);
  }

  bool same_as(const PhaseSpace& o) const { return this == &o || coords_ == o.coords_; }

  static bool is_identifier(const std::string& s) {
    if (s.empty()) return false;
    auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    if (!alpha(s[0])) return false;
    return std::all_of(s.begin(), s.end(), [&](char c) { return alpha(c) || (c >= '0' && c <= '9'); });
  }

  static bool is_reserved(const std::string& s) {
    return s == "sin" || s == "cos" || s == "tan" || s == "exp" || s == "ln" || s == "sqrt";
  }

 private:
  PhaseSpace() = default;
  int n_ = 0;
  std::vector<std::string> coords_;
  std::vector<Parameter> params_;
  std::vector<Interval> box_;
  std::string domain_note_;
};

using SpacePtr = std::shared_ptr<const PhaseSpace>;

}  // namespace noether
