#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "noether/symexpr/normalize.hpp"
#include "noether/symexpr/space.hpp"

namespace noether {

/// Settings for probabilistic zero testing. The same config always produces
/// the same probe points, so every decision is reproducible from the seed.
struct ProbeConfig {
  int count = 64;
  std::uint64_t seed = 42;
  double tolerance = 1e-9;
  int max_resample = 32;
  std::vector<Interval> coord_box;
  std::vector<Interval> param_box;

  static ProbeConfig for_space(const PhaseSpace& space, std::uint64_t seed = 42, int count = 64,
                               double tolerance = 1e-9) {
    ProbeConfig c;
    c.seed = seed;
    c.count = count;
    c.tolerance = tolerance;
    c.coord_box = space.box();
    for (const auto& p : space.parameters()) c.param_box.push_back(p.probe);
    return c;
  }
};

struct ProbeSample {
  std::vector<double> coords;
  std::vector<double> params;
  EvalPoint at() const { return {coords, params}; }
};

/// Deterministic stream of sample points drawn uniformly from the probe box.
class ProbeSampler {
 public:
  explicit ProbeSampler(const ProbeConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

  ProbeSample next() {
    ProbeSample s;
    s.coords.reserve(cfg_.coord_box.size());
    for (const auto& b : cfg_.coord_box) s.coords.push_back(draw(b));
    for (const auto& b : cfg_.param_box) s.params.push_back(draw(b));
    return s;
  }

 private:
  double draw(const Interval& b) {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return b.lo + (b.hi - b.lo) * u;
  }
  const ProbeConfig& cfg_;
  std::mt19937_64 rng_;
};

/// Samples `cfg.count` points at which every expression in `exprs` evaluates
/// without a domain error; points that fail are resampled.
inline std::vector<ProbeSample> valid_probe_points(const ProbeConfig& cfg, std::span<const Expr> exprs) {
  ProbeSampler sampler(cfg);
  std::vector<ProbeSample> out;
  for (int k = 0; k < cfg.count; ++k) {
    for (int attempt = 0; attempt < cfg.max_resample; ++attempt) {
      ProbeSample s = sampler.next();
      try {
        for (const auto& e : exprs) (void)eval(e, s.at());
      } catch (const DomainError&) {
        continue;
      }
      out.push_back(std::move(s));
      break;
    }
  }
  if (out.empty()) throw Error("no valid probe points");
  return out;
}

enum class ZeroKind { SymbolicZero, NumericZero, NonZero };

inline const char* to_string(ZeroKind k) {
  switch (k) {
    case ZeroKind::SymbolicZero: return "symbolic-zero";
    case ZeroKind::NumericZero: return "numeric-zero";
    case ZeroKind::NonZero: return "nonzero";
  }
  return "?";
}

struct ZeroVerdict {
  ZeroKind kind = ZeroKind::SymbolicZero;
  int probes = 0;            // valid probe points evaluated
  double max_residual = 0.0;  // largest |value| seen (NumericZero evidence)
  std::uint64_t seed = 0;
  std::optional<ProbeSample> witness;
  double witness_value = 0.0;

  bool zero() const { return kind != ZeroKind::NonZero; }
  bool symbolic() const { return kind == ZeroKind::SymbolicZero; }
  bool numeric() const { return kind == ZeroKind::NumericZero; }
};

namespace detail {

/// Evaluates a normalized expression term by term: returns {value, scale}
/// where scale is the sum of absolute term values.
inline std::pair<double, double> eval_with_scale(const Expr& normal, const EvalPoint& at) {
  if (normal.op() != Op::Add) {
    const double v = eval(normal, at);
    return {v, std::abs(v)};
  }
  double v = 0.0, s = 0.0;
  for (const auto& t : normal.args()) {
    const double x = eval(t, at);
    v += x;
    s += std::abs(x);
  }
  return {v, s};
}

inline ZeroVerdict probe_normalized(const Expr& normal, const ProbeConfig& cfg) {
  ZeroVerdict v;
  v.kind = ZeroKind::NumericZero;
  v.seed = cfg.seed;
  ProbeSampler sampler(cfg);
  for (int k = 0; k < cfg.count; ++k) {
    for (int attempt = 0; attempt < cfg.max_resample; ++attempt) {
      ProbeSample s = sampler.next();
      std::pair<double, double> r;
      try {
        r = eval_with_scale(normal, s.at());
      } catch (const DomainError&) {
        continue;
      }
      ++v.probes;
      const double mag = std::abs(r.first);
      v.max_residual = std::max(v.max_residual, mag);
      if (mag > cfg.tolerance * std::max(1.0, r.second)) {
        v.kind = ZeroKind::NonZero;
        v.witness = std::move(s);
        v.witness_value = r.first;
        return v;
      }
      break;
    }
  }
  if (v.probes == 0) throw Error("no valid probe points for '" + to_string(normal) + "'");
  return v;
}

}  // namespace detail

/// Hybrid zero test: symbolic normal form first, then seeded probing.
/// NonZero verdicts carry a witness point whose value exceeds the tolerance.
inline ZeroVerdict is_zero(const Expr& e, const ProbeConfig& cfg) {
  const Expr n = normalize(e);
  if (n.is_zero()) {
    ZeroVerdict v;
    v.seed = cfg.seed;
    return v;
  }
  return detail::probe_normalized(n, cfg);
}

/// Aggregate verdict over several expressions: SymbolicZero only when every
/// entry is; NonZero as soon as one entry is (with that entry's witness).
inline ZeroVerdict is_zero_all(std::span<const Expr> exprs, const ProbeConfig& cfg,
                               std::size_t* failing_index = nullptr) {
  ZeroVerdict agg;
  agg.seed = cfg.seed;
  for (std::size_t i = 0; i < exprs.size(); ++i) {
    ZeroVerdict v = is_zero(exprs[i], cfg);
    if (!v.zero()) {
      if (failing_index) *failing_index = i;
      return v;
    }
    if (v.numeric()) {
      agg.kind = ZeroKind::NumericZero;
      agg.probes = std::max(agg.probes, v.probes);
      agg.max_residual = std::max(agg.max_residual, v.max_residual);
    }
  }
  return agg;
}

struct ConstantVerdict {
  bool constant = false;
  ZeroKind kind = ZeroKind::SymbolicZero;  // weakest certificate among the partials
  std::optional<Expr> value;               // symbolic value when coordinate-free
  double numeric_value = 0.0;              // value at the space's parameter values
  int witness_coord = -1;                  // coordinate whose partial is nonzero
  ZeroVerdict witness;
};

/// A function is locally constant when every coordinate partial vanishes.
inline ConstantVerdict is_constant(const Expr& e, const PhaseSpace& space, const ProbeConfig& cfg) {
  ConstantVerdict out;
  const Expr n = normalize(e);
  for (int i = 0; i < space.dim(); ++i) {
    ZeroVerdict v = is_zero(differentiate(n, i), cfg);
    if (!v.zero()) {
      out.constant = false;
      out.kind = ZeroKind::NonZero;
      out.witness_coord = i;
      out.witness = std::move(v);
      return out;
    }
    if (v.numeric()) out.kind = ZeroKind::NumericZero;
  }
  out.constant = true;
  const std::vector<double> params = space.parameter_values();
  if (!has_coords(n)) {
    out.value = n;
    out.numeric_value = eval(n, {space.box_center(), params});
    return out;
  }
  std::vector<ProbeSample> pts = valid_probe_points(cfg, std::span<const Expr>(&n, 1));
  out.numeric_value = eval(n, {pts.front().coords, params});
  return out;
}

}  // namespace noether
