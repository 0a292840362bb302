#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "noether/hamiltonian.hpp"

namespace noether {

enum class Method { Rk4, ImplicitMidpoint };

inline const char* to_string(Method m) { return m == Method::Rk4 ? "rk4" : "implicit_midpoint"; }

inline Method parse_method(const std::string& s) {
  if (s == "rk4") return Method::Rk4;
  if (s == "implicit_midpoint") return Method::ImplicitMidpoint;
  throw ValidationError("unknown integrator '" + s + "' (expected rk4 or implicit_midpoint)");
}

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  Method method = Method::Rk4;
  double dt = 0.0;
  std::vector<double> x0;
  bool truncated = false;
  std::string diagnostic;

  const std::vector<double>& final_state() const { return states.back(); }
};

namespace detail {

/// Numeric right-hand side of a vector field at fixed parameter values.
class NumericField {
 public:
  NumericField(const VectorField& f, std::vector<double> params) : comps_(f.components()), params_(std::move(params)) {
    for (const auto& c : comps_) collect_tan_args(c);
  }

  void operator()(std::span<const double> x, std::span<double> out) const {
    for (std::size_t i = 0; i < comps_.size(); ++i) out[i] = comps_[i].is_zero() ? 0.0 : eval(comps_[i], {x, params_});
  }

  /// Throws when a tan argument passes a pole between two states: the step
  /// left the chart even if no sample landed on the pole itself.
  void check_chart(std::span<const double> before, std::span<const double> after) const {
    for (const auto& a : tan_args_) {
      const double u = eval(a, {before, params_}), v = eval(a, {after, params_});
      if (std::floor(u / std::numbers::pi + 0.5) != std::floor(v / std::numbers::pi + 0.5))
        throw DomainError("tan pole crossed", "tan(" + to_string(a) + ")");
    }
  }

 private:
  void collect_tan_args(const Expr& e) {
    if (e.op() == Op::Tan &&
        std::none_of(tan_args_.begin(), tan_args_.end(), [&](const Expr& a) { return compare(a, e.arg()) == 0; }))
      tan_args_.push_back(e.arg());
    for (const auto& a : e.args()) collect_tan_args(a);
  }

  std::vector<Expr> comps_;
  std::vector<double> params_;
  std::vector<Expr> tan_args_;
};

inline void rk4_step(const NumericField& f, std::vector<double>& x, double dt, std::vector<std::vector<double>>& k) {
  const std::size_t d = x.size();
  std::vector<double>& tmp = k[4];
  f(x, k[0]);
  for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * dt * k[0][i];
  f(tmp, k[1]);
  for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * dt * k[1][i];
  f(tmp, k[2]);
  for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + dt * k[2][i];
  f(tmp, k[3]);
  for (std::size_t i = 0; i < d; ++i) x[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
}

/// x_{n+1} = x_n + dt f((x_n + x_{n+1})/2), fixed-point iteration.
inline bool midpoint_step(const NumericField& f, std::vector<double>& x, double dt, std::vector<std::vector<double>>& k) {
  const std::size_t d = x.size();
  std::vector<double>& next = k[0];
  std::vector<double>& mid = k[1];
  std::vector<double>& rhs = k[2];
  f(x, rhs);
  for (std::size_t i = 0; i < d; ++i) next[i] = x[i] + dt * rhs[i];
  for (int it = 0; it < 50; ++it) {
    for (std::size_t i = 0; i < d; ++i) mid[i] = 0.5 * (x[i] + next[i]);
    f(mid, rhs);
    double change = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double v = x[i] + dt * rhs[i];
      change = std::max(change, std::abs(v - next[i]));
      scale = std::max(scale, std::abs(v));
      next[i] = v;
    }
    if (change <= 1e-12 * scale) {
      x = next;
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Fixed-step integration of an arbitrary vector field; domain errors
/// truncate the trajectory and leave a diagnostic.
inline Trajectory integrate_field(const VectorField& field, const std::vector<double>& params, std::vector<double> x0,
                                  double t_final, double dt, Method method) {
  if (!(dt > 0.0)) throw ValidationError("step size must be positive");
  if (!(t_final >= 0.0)) throw ValidationError("final time must be nonnegative");
  if (static_cast<int>(x0.size()) != field.space()->dim()) throw ValidationError("initial state has the wrong dimension");
  Trajectory tr;
  tr.method = method;
  tr.dt = dt;
  tr.x0 = x0;
  const detail::NumericField f(field, params);
  std::vector<std::vector<double>> work(5, std::vector<double>(x0.size()));
  std::vector<double> x = x0;
  try {
    std::vector<double> probe(x.size());
    f(x, probe);
  } catch (const DomainError& e) {
    throw ValidationError(std::string("initial state outside the chart domain: ") + e.what());
  }
  const auto steps = static_cast<long>(std::llround(t_final / dt));
  tr.times.reserve(static_cast<std::size_t>(steps) + 1);
  tr.states.reserve(static_cast<std::size_t>(steps) + 1);
  tr.times.push_back(0.0);
  tr.states.push_back(x);
  for (long s = 1; s <= steps; ++s) {
    const std::vector<double> before = x;
    try {
      if (method == Method::Rk4) {
        detail::rk4_step(f, x, dt, work);
      } else if (!detail::midpoint_step(f, x, dt, work)) {
        tr.truncated = true;
        tr.diagnostic = "implicit stage did not converge at t = " + std::to_string(static_cast<double>(s) * dt);
        break;
      }
      f.check_chart(before, x);
    } catch (const DomainError& e) {
      tr.truncated = true;
      tr.diagnostic = "evaluation failed at t = " + std::to_string(static_cast<double>(s) * dt) + ": " + e.what();
      break;
    }
    tr.times.push_back(static_cast<double>(s) * dt);
    tr.states.push_back(x);
  }
  return tr;
}

inline Trajectory integrate(const HamiltonianSystem& sys, std::vector<double> x0, double t_final, double dt,
                            Method method = Method::Rk4) {
  return integrate_field(sys.x_h(), sys.space()->parameter_values(), std::move(x0), t_final, dt, method);
}

inline Trajectory integrate(const HamiltonianSystem& sys, const std::vector<double>& params, std::vector<double> x0,
                            double t_final, double dt, Method method) {
  return integrate_field(sys.x_h(), params, std::move(x0), t_final, dt, method);
}

struct DriftReport {
  std::string quantity;
  double initial = 0.0;
  double final_value = 0.0;
  double max_abs_drift = 0.0;
  double max_rel_drift = 0.0;  // relative to max(|f(x0)|, 1e-12)
  double mean_abs_drift = 0.0;
  std::size_t samples = 0;
};

using ScalarFunction = std::function<double(std::span<const double>, std::span<const double>)>;

inline DriftReport check_conserved(const std::string& id, const ScalarFunction& f, const Trajectory& traj,
                                   const std::vector<double>& params) {
  if (traj.states.empty()) throw ValidationError("empty trajectory");
  DriftReport r;
  r.quantity = id;
  r.initial = f(traj.states.front(), params);
  const double denom = std::max(std::abs(r.initial), 1e-12);
  double total = 0.0;
  for (const auto& s : traj.states) {
    const double v = f(s, params);
    const double d = std::abs(v - r.initial);
    r.max_abs_drift = std::max(r.max_abs_drift, d);
    total += d;
    r.final_value = v;
  }
  r.samples = traj.states.size();
  r.max_rel_drift = r.max_abs_drift / denom;
  r.mean_abs_drift = total / static_cast<double>(r.samples);
  return r;
}

inline DriftReport check_conserved(const Expr& f, const Trajectory& traj, const std::vector<double>& params) {
  return check_conserved(
      to_string(f), [&](std::span<const double> x, std::span<const double> p) { return eval(f, {x, p}); }, traj,
      params);
}

struct SymmetryResidual {
  double residual = 0.0;  // |flow-then-integrate - integrate-then-flow| / epsilon
  bool pass = false;
  std::string diagnostic;
};

namespace detail {

inline std::vector<double> euler_flow(const NumericField& y, std::vector<double> x, double epsilon, int substeps) {
  std::vector<double> v(x.size());
  const double h = epsilon / substeps;
  for (int k = 0; k < substeps; ++k) {
    y(x, v);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += h * v[i];
  }
  return x;
}

}  // namespace detail

/// Numeric evidence that the flow of Y maps solutions to solutions.
inline SymmetryResidual check_symmetry_numeric(const VectorField& y, const HamiltonianSystem& sys,
                                               const std::vector<double>& x0, double epsilon = 1e-5,
                                               double t_final = 1.0, double dt = 1e-3,
                                               double threshold = 1e-3) {
  SymmetryResidual out;
  const auto params = sys.space()->parameter_values();
  const detail::NumericField yf(y, params);
  constexpr int substeps = 16;
  try {
    const auto shifted = detail::euler_flow(yf, x0, epsilon, substeps);
    const Trajectory a = integrate(sys, params, shifted, t_final, dt, Method::Rk4);
    const Trajectory b = integrate(sys, params, x0, t_final, dt, Method::Rk4);
    if (a.truncated || b.truncated) {
      out.diagnostic = a.truncated ? a.diagnostic : b.diagnostic;
      return out;
    }
    const auto moved = detail::euler_flow(yf, b.final_state(), epsilon, substeps);
    double sq = 0.0;
    for (std::size_t i = 0; i < moved.size(); ++i) sq += (a.final_state()[i] - moved[i]) * (a.final_state()[i] - moved[i]);
    out.residual = std::sqrt(sq) / epsilon;
    out.pass = out.residual < threshold;
  } catch (const DomainError& e) {
    out.diagnostic = e.what();
  }
  return out;
}

/// Plain-text table: t then coordinates, 17 significant digits.
inline void write_trajectory(std::ostream& os, const Trajectory& tr, const std::vector<std::string>& names) {
  os << "# t";
  for (const auto& n : names) os << ' ' << n;
  os << '\n';
  char buf[40];
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", tr.times[k]);
    os << buf;
    for (double v : tr.states[k]) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ' ' << buf;
    }
    os << '\n';
  }
}

}  // namespace noether
