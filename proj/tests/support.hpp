#pragma once

#include <random>
#include <vector>

#include "noether/report.hpp"

namespace noether::testing {

/// Random small expression trees over the coordinates and parameters of a
/// space. Only everywhere-defined operations are used so probing never hits
/// a pole.
class RandomExpr {
 public:
  RandomExpr(SpacePtr space, std::uint64_t seed) : space_(std::move(space)), rng_(seed) {}

  Expr operator()(int depth = 4) {
    if (depth <= 0 || pick(4) == 0) return leaf();
    switch (pick(6)) {
      case 0:
      case 1: return (*this)(depth - 1) + (*this)(depth - 1);
      case 2:
      case 3: return (*this)(depth - 1) * (*this)(depth - 1);
      case 4: return make_pow((*this)(depth - 1), Rational(2 + pick(2)));
      default: {
        const int f = pick(3);
        Expr a = (*this)(depth - 1);
        return f == 0 ? sin(a) : f == 1 ? cos(a) : exp(make_num(Rational(1, 4)) * a);
      }
    }
  }

  Expr leaf() {
    const int np = static_cast<int>(space_->parameters().size());
    const int r = pick(6);
    if (r < 4) return space_->coord(pick(space_->dim()));
    if (r == 4 && np > 0) return space_->param(pick(np));
    return make_num(Rational(pick(7) - 3, 1 + pick(3)));
  }

  KForm form(int degree, double density = 0.6) {
    KForm f = KForm::zero(space_, degree);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& idx : KForm::all_tuples(space_->dim(), degree))
      if (u(rng_) < density) f.set(idx, (*this)(3));
    return f;
  }

  VectorField field() {
    std::vector<Expr> c;
    for (int i = 0; i < space_->dim(); ++i) c.push_back((*this)(3));
    return {space_, std::move(c)};
  }

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  std::mt19937_64& rng() { return rng_; }

 private:
  SpacePtr space_;
  std::mt19937_64 rng_;
};

inline SpacePtr oscillator_space() { return PhaseSpace::create(2, {"q1", "q2", "p1", "p2"}, {{"Omega"}}); }

inline SpacePtr pendulum_space() {
  return PhaseSpace::create(2, {"theta", "phi", "p_theta", "p_phi"}, {{"Omega"}}, {{-1.2, 1.2}, {-1, 1}, {-1, 1}, {-1, 1}});
}

/// Central finite difference of e along coordinate i at a point.
inline double finite_difference(const Expr& e, int i, std::vector<double> x, const std::vector<double>& params,
                                double step = 1e-5) {
  const double x0 = x[static_cast<std::size_t>(i)];
  x[static_cast<std::size_t>(i)] = x0 + step;
  const double fp = eval(e, {x, params});
  x[static_cast<std::size_t>(i)] = x0 - step;
  const double fm = eval(e, {x, params});
  return (fp - fm) / (2.0 * step);
}

}  // namespace noether::testing
