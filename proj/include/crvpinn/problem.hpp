#pragma once

#include <cmath>
#include <numbers>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include "crvpinn/mlp.hpp"

namespace crvpinn {

inline constexpr double kPi = std::numbers::pi;

using SpaceTimeFn = std::function<double(double x, double y, double t)>;
using SpaceFn = std::function<double(double x, double y)>;

/// Exact solution with the analytic derivatives the residual and error
/// norms need.
struct ExactSolution {
  SpaceTimeFn value, dx, dy, dt, dxx, dyy;
};

/// Initial state u0(x,y) with enough derivatives to differentiate the
/// time shift analytically.
struct InitialCondition {
  SpaceFn value, dx, dy, dxx, dyy;
};

inline InitialCondition zero_initial_condition() {
  auto zero = [](double, double) { return 0.0; };
  return InitialCondition{zero, zero, zero, zero, zero};
}

/// Scenario data: diffusion per axis, advection field, source, initial and
/// boundary data, and (for verification problems) the exact field.
struct Problem {
  std::string name;
  double kx = 0.1;
  double ky = 0.1;
  SpaceTimeFn advection_x;
  SpaceTimeFn advection_y;
  SpaceTimeFn source;
  InitialCondition initial;
  SpaceTimeFn dirichlet;
  std::optional<ExactSolution> exact;
};

/// Vertical advection under the inversion layer: no transport below
/// y = 0.1, a constant downward drift of -2 above it. The profile is
/// time-independent.
inline double inversion_advection_y(double y, double /*t*/) {
  return y < 0.1 ? 0.0 : -2.0;
}

/// Emission from a source moving left to right near the ground: a
/// Gaussian height profile in y times a cosine smoothstep across the wave
/// front at x = 10 t, cut off above y = 0.2.
inline double snowmobile_source(double x, double y, double t) {
  constexpr double kHeightMax = 0.5;
  constexpr double kVelocity = 10.0;
  constexpr double kWaveWidth = 0.8;
  constexpr double kYSpread = 0.4;
  if (y > 0.2) return 0.0;
  const double height = kHeightMax * std::exp(-y * y / (2.0 * kYSpread * kYSpread));
  double alpha = (kVelocity * t - x) / kWaveWidth;
  alpha = std::clamp(alpha, 0.0, 1.0);
  const double front = 0.5 * (1.0 - std::cos(kPi * alpha));
  return height * front;
}

/// Linear-in-time ramp of the initial state, (1 - t/T) u0(x,y); vanishes
/// at t = T and restores u0 at t = 0.
inline double shift_value(const Problem& p, double x, double y, double t, double T) {
  return (1.0 - t / T) * p.initial.value(x, y);
}

/// Right-hand side after homogenizing the initial condition: the original
/// source minus the transport operator applied to the shift, so that
/// w = u - shift solves the same equation with zero initial data.
inline double effective_source(const Problem& p, double T, double x, double y, double t) {
  const double ramp = 1.0 - t / T;
  const double u0 = p.initial.value(x, y);
  const double shift_t = -u0 / T;
  const double diffusion = -p.kx * p.initial.dxx(x, y) - p.ky * p.initial.dyy(x, y);
  const double advection =
      p.advection_x(x, y, t) * p.initial.dx(x, y) + p.advection_y(x, y, t) * p.initial.dy(x, y);
  return p.source(x, y, t) - shift_t - ramp * (diffusion + advection);
}

/// Problem for the shifted unknown w = u - shift: zero initial data, the
/// effective source, and the exact field translated accordingly.
struct ShiftedProblem {
  Problem base;
  double T = 1.0;
  Problem shifted;
};

inline ShiftedProblem make_shifted(const Problem& p, double T) {
  ShiftedProblem s;
  s.base = p;
  s.T = T;
  s.shifted = p;
  s.shifted.name = p.name + "+shift";
  s.shifted.source = [p, T](double x, double y, double t) {
    return effective_source(p, T, x, y, t);
  };
  s.shifted.initial = zero_initial_condition();
  s.shifted.dirichlet = [p, T](double x, double y, double t) {
    return p.dirichlet(x, y, t) - shift_value(p, x, y, t, T);
  };
  if (p.exact) {
    const ExactSolution ex = *p.exact;
    const InitialCondition ic = p.initial;
    ExactSolution w;
    w.value = [ex, ic, T](double x, double y, double t) {
      return ex.value(x, y, t) - (1.0 - t / T) * ic.value(x, y);
    };
    w.dx = [ex, ic, T](double x, double y, double t) {
      return ex.dx(x, y, t) - (1.0 - t / T) * ic.dx(x, y);
    };
    w.dy = [ex, ic, T](double x, double y, double t) {
      return ex.dy(x, y, t) - (1.0 - t / T) * ic.dy(x, y);
    };
    w.dt = [ex, ic, T](double x, double y, double t) {
      return ex.dt(x, y, t) + ic.value(x, y) / T;
    };
    w.dxx = [ex, ic, T](double x, double y, double t) {
      return ex.dxx(x, y, t) - (1.0 - t / T) * ic.dxx(x, y);
    };
    w.dyy = [ex, ic, T](double x, double y, double t) {
      return ex.dyy(x, y, t) - (1.0 - t / T) * ic.dyy(x, y);
    };
    s.shifted.exact = w;
  }
  return s;
}

/// Pollution transport under thermal inversion: zero initial data, zero
/// Dirichlet walls, the moving near-ground emission source, and downward
/// drift above the inversion base. No exact field.
inline Problem snowmobile_problem(double kx = 0.1, double ky = 0.1) {
  Problem p;
  p.name = "snowmobile";
  p.kx = kx;
  p.ky = ky;
  p.advection_x = [](double, double, double) { return 0.0; };
  p.advection_y = [](double, double y, double t) { return inversion_advection_y(y, t); };
  p.source = [](double x, double y, double t) { return snowmobile_source(x, y, t); };
  p.initial = zero_initial_condition();
  p.dirichlet = [](double, double, double) { return 0.0; };
  p.exact = std::nullopt;
  return p;
}

/// Verification problem M1: exact field t sin(pi x) sin(pi y), zero
/// initial and boundary data, and the same discontinuous vertical
/// advection as the case study so the piecewise-coefficient path is
/// exercised. The source is derived from the exact field.
inline Problem manufactured_problem(const std::string& id, double eps = 0.1) {
  if (id != "M1") {
    throw std::invalid_argument("manufactured_problem: unknown id '" + id + "'");
  }
  Problem p;
  p.name = "M1";
  p.kx = eps;
  p.ky = eps;
  p.advection_x = [](double, double, double) { return 0.0; };
  p.advection_y = [](double, double y, double t) { return inversion_advection_y(y, t); };
  p.initial = zero_initial_condition();
  p.dirichlet = [](double, double, double) { return 0.0; };

  ExactSolution ex;
  ex.value = [](double x, double y, double t) { return t * std::sin(kPi * x) * std::sin(kPi * y); };
  ex.dx = [](double x, double y, double t) {
    return t * kPi * std::cos(kPi * x) * std::sin(kPi * y);
  };
  ex.dy = [](double x, double y, double t) {
    return t * kPi * std::sin(kPi * x) * std::cos(kPi * y);
  };
  ex.dt = [](double x, double y, double) { return std::sin(kPi * x) * std::sin(kPi * y); };
  ex.dxx = [](double x, double y, double t) {
    return -t * kPi * kPi * std::sin(kPi * x) * std::sin(kPi * y);
  };
  ex.dyy = [](double x, double y, double t) {
    return -t * kPi * kPi * std::sin(kPi * x) * std::sin(kPi * y);
  };
  p.exact = ex;

  const double kx = p.kx, ky = p.ky;
  const SpaceTimeFn ax = p.advection_x, ay = p.advection_y;
  p.source = [ex, kx, ky, ax, ay](double x, double y, double t) {
    return ex.dt(x, y, t) - kx * ex.dxx(x, y, t) - ky * ex.dyy(x, y, t) +
           ax(x, y, t) * ex.dx(x, y, t) + ay(x, y, t) * ex.dy(x, y, t);
  };
  return p;
}

inline Problem problem_by_name(const std::string& scenario) {
  if (scenario == "snowmobile") return snowmobile_problem();
  if (scenario == "M1") return manufactured_problem("M1");
  throw std::invalid_argument("unknown scenario '" + scenario + "'");
}

/// Largest absolute PDE residual of the exact field at `n` random interior
/// points; requires an exact solution. Used as the consistency self-test
/// for every problem that carries one.
inline double problem_self_test(const Problem& p, double T, int n = 1000,
                                std::uint64_t seed = 12345) {
  if (!p.exact) throw std::invalid_argument("problem_self_test: no exact solution");
  const ExactSolution& ex = *p.exact;
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int s = 0; s < n; ++s) {
    const double x = detail::uniform01(rng);
    const double y = detail::uniform01(rng);
    const double t = T * detail::uniform01(rng);
    const double res = ex.dt(x, y, t) - p.kx * ex.dxx(x, y, t) - p.ky * ex.dyy(x, y, t) +
                       p.advection_x(x, y, t) * ex.dx(x, y, t) +
                       p.advection_y(x, y, t) * ex.dy(x, y, t) - p.source(x, y, t);
    worst = std::max(worst, std::abs(res));
  }
  return worst;
}

}  // namespace crvpinn
