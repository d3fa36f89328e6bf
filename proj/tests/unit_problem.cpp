#include <doctest.h>

#include <cmath>
#include <random>

#include "crvpinn/problem.hpp"

using namespace crvpinn;

namespace {

constexpr long double kPiL = 3.14159265358979323846264338327950288L;

long double m1_exact_ld(long double x, long double y, long double t) {
  return t * std::sin(kPiL * x) * std::sin(kPiL * y);
}

// Fourth-order central stencils evaluated in long double, the independent
// differentiation oracle for the manufactured source.
template <typename F>
long double fd_first(F f, long double s, long double h) {
  return (-f(s + 2 * h) + 8 * f(s + h) - 8 * f(s - h) + f(s - 2 * h)) / (12 * h);
}

template <typename F>
long double fd_second(F f, long double s, long double h) {
  return (-f(s + 2 * h) + 16 * f(s + h) - 30 * f(s) + 16 * f(s - h) - f(s - 2 * h)) /
         (12 * h * h);
}

}  // namespace

TEST_SUITE("problem") {
  TEST_CASE("advection profile under the inversion layer") {
    CHECK(inversion_advection_y(0.05, 0.3) == 0.0);
    CHECK(inversion_advection_y(0.5, 0.3) == -2.0);
    CHECK(inversion_advection_y(0.5, 0.9) == -2.0);  // both time branches coincide
    CHECK(inversion_advection_y(0.0, 0.0) == 0.0);
  }

  TEST_CASE("moving source values") {
    CHECK(snowmobile_source(0.0, 0.3, 0.7) == 0.0);  // above the cutoff strip
    CHECK(snowmobile_source(0.0, 0.0, 0.2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(snowmobile_source(1.0, 0.0, 0.0) == 0.0);  // ahead of the wave front
  }

  TEST_CASE("source bounds and monotonicity in time") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      const double x = detail::uniform01(rng);
      const double y = detail::uniform01(rng);
      const double t = detail::uniform01(rng);
      const double s = snowmobile_source(x, y, t);
      CHECK(s >= 0.0);
      CHECK(s <= 0.5);
    }
    for (int trial = 0; trial < 50; ++trial) {
      const double x = detail::uniform01(rng);
      const double y = 0.2 * detail::uniform01(rng);
      double prev = -1.0;
      for (int step = 0; step <= 20; ++step) {
        const double s = snowmobile_source(x, y, step / 20.0);
        CHECK(s >= prev);
        prev = s;
      }
    }
  }

  TEST_CASE("shift endpoints") {
    Problem p = snowmobile_problem();
    p.initial.value = [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); };
    const double T = 2.0;
    CHECK(shift_value(p, 0.3, 0.4, 0.0, T) ==
          doctest::Approx(p.initial.value(0.3, 0.4)).epsilon(1e-15));
    CHECK(shift_value(p, 0.3, 0.4, T, T) == 0.0);

    const Problem zero = snowmobile_problem();
    for (double t : {0.0, 0.5, 1.0}) CHECK(shift_value(zero, 0.2, 0.8, t, 1.0) == 0.0);
  }

  TEST_CASE("effective source reduces to f for zero initial data") {
    const Problem p = snowmobile_problem();
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
      const double x = detail::uniform01(rng);
      const double y = detail::uniform01(rng);
      const double t = detail::uniform01(rng);
      CHECK(effective_source(p, 1.0, x, y, t) == p.source(x, y, t));
    }
  }

  TEST_CASE("effective source at the final time keeps only the ramp rate") {
    Problem p = manufactured_problem("M1");
    p.initial.value = [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); };
    p.initial.dx = [](double x, double y) { return kPi * std::cos(kPi * x) * std::sin(kPi * y); };
    p.initial.dy = [](double x, double y) { return kPi * std::sin(kPi * x) * std::cos(kPi * y); };
    p.initial.dxx = [](double x, double y) {
      return -kPi * kPi * std::sin(kPi * x) * std::sin(kPi * y);
    };
    p.initial.dyy = [](double x, double y) {
      return -kPi * kPi * std::sin(kPi * x) * std::sin(kPi * y);
    };
    const double T = 1.0;
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      const double x = detail::uniform01(rng);
      const double y = detail::uniform01(rng);
      // At t = T the ramp vanishes, leaving only the ramp rate +u0/T moved
      // to the right-hand side.
      const double expected = p.source(x, y, T) + p.initial.value(x, y) / T;
      CHECK(effective_source(p, T, x, y, T) == doctest::Approx(expected).epsilon(1e-13));
    }

    // Affine in the initial data: scaling u0 scales F - f.
    Problem scaled = p;
    const double lambda = 3.0;
    const InitialCondition base_ic = p.initial;
    scaled.initial.value = [base_ic, lambda](double x, double y) {
      return lambda * base_ic.value(x, y);
    };
    scaled.initial.dx = [base_ic, lambda](double x, double y) { return lambda * base_ic.dx(x, y); };
    scaled.initial.dy = [base_ic, lambda](double x, double y) { return lambda * base_ic.dy(x, y); };
    scaled.initial.dxx = [base_ic, lambda](double x, double y) {
      return lambda * base_ic.dxx(x, y);
    };
    scaled.initial.dyy = [base_ic, lambda](double x, double y) {
      return lambda * base_ic.dyy(x, y);
    };
    for (int trial = 0; trial < 20; ++trial) {
      const double x = detail::uniform01(rng);
      const double y = detail::uniform01(rng);
      const double t = detail::uniform01(rng);
      const double base = effective_source(p, T, x, y, t) - p.source(x, y, t);
      const double big = effective_source(scaled, T, x, y, t) - scaled.source(x, y, t);
      CHECK(big == doctest::Approx(lambda * base).epsilon(1e-12));
    }
  }

  TEST_CASE("manufactured problem basics") {
    const Problem p = manufactured_problem("M1");
    CHECK(p.initial.value(0.3, 0.4) == 0.0);
    for (double y : {0.1, 0.5, 0.9})
      for (double t : {0.1, 0.9}) {
        CHECK(p.exact->value(0.0, y, t) == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(std::abs(p.exact->value(1.0, y, t)) < 1e-15);
        CHECK(p.exact->value(y, y, 0.0) == 0.0);
        CHECK(p.dirichlet(0.0, y, t) == 0.0);
      }
    CHECK_THROWS_AS(manufactured_problem("M2"), std::invalid_argument);
    CHECK_THROWS_AS(problem_by_name("unknown"), std::invalid_argument);
  }

  TEST_CASE("manufactured source against the differentiation oracle") {
    const Problem p = manufactured_problem("M1");
    const long double h = 1e-3L;
    const long double x = 0.5L, y = 0.5L, t = 1.0L;
    const long double ut = fd_first([&](long double s) { return m1_exact_ld(x, y, s); }, t, h);
    const long double uy = fd_first([&](long double s) { return m1_exact_ld(x, s, t); }, y, h);
    const long double uxx = fd_second([&](long double s) { return m1_exact_ld(s, y, t); }, x, h);
    const long double uyy = fd_second([&](long double s) { return m1_exact_ld(x, s, t); }, y, h);
    const long double beta_y = -2.0L;  // inversion profile at y = 0.5
    const long double oracle = ut - 0.1L * uxx - 0.1L * uyy + beta_y * uy;
    CHECK(std::abs(static_cast<double>(oracle) - p.source(0.5, 0.5, 1.0)) < 1e-10);
  }

  TEST_CASE("exact fields satisfy their PDE at random points") {
    CHECK(problem_self_test(manufactured_problem("M1"), 1.0) < 1e-8);
    CHECK_THROWS_AS(problem_self_test(snowmobile_problem(), 1.0), std::invalid_argument);
  }

  TEST_CASE("shifted problem homogenizes the initial condition") {
    // Exact field (1 - t/T) sin(pi x) sin(pi y): the shifted unknown is
    // identically zero, so the effective source must vanish and the shifted
    // exact field must solve the shifted problem.
    Problem p;
    p.name = "ramp";
    p.kx = 0.07;
    p.ky = 0.13;
    const double T = 1.5;
    p.advection_x = [](double, double y, double) { return 0.5 * y; };
    p.advection_y = [](double, double y, double t) { return inversion_advection_y(y, t); };
    p.dirichlet = [T](double x, double y, double t) {
      return (1.0 - t / T) * std::sin(kPi * x) * std::sin(kPi * y);
    };
    p.initial.value = [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); };
    p.initial.dx = [](double x, double y) { return kPi * std::cos(kPi * x) * std::sin(kPi * y); };
    p.initial.dy = [](double x, double y) { return kPi * std::sin(kPi * x) * std::cos(kPi * y); };
    p.initial.dxx = [](double x, double y) {
      return -kPi * kPi * std::sin(kPi * x) * std::sin(kPi * y);
    };
    p.initial.dyy = [](double x, double y) {
      return -kPi * kPi * std::sin(kPi * x) * std::sin(kPi * y);
    };
    const InitialCondition ic = p.initial;
    ExactSolution ex;
    ex.value = [ic, T](double x, double y, double t) { return (1.0 - t / T) * ic.value(x, y); };
    ex.dx = [ic, T](double x, double y, double t) { return (1.0 - t / T) * ic.dx(x, y); };
    ex.dy = [ic, T](double x, double y, double t) { return (1.0 - t / T) * ic.dy(x, y); };
    ex.dt = [ic, T](double x, double y, double) { return -ic.value(x, y) / T; };
    ex.dxx = [ic, T](double x, double y, double t) { return (1.0 - t / T) * ic.dxx(x, y); };
    ex.dyy = [ic, T](double x, double y, double t) { return (1.0 - t / T) * ic.dyy(x, y); };
    p.exact = ex;
    const double kx = p.kx, ky = p.ky;
    const SpaceTimeFn ax = p.advection_x, ay = p.advection_y;
    p.source = [ex, kx, ky, ax, ay](double x, double y, double t) {
      return ex.dt(x, y, t) - kx * ex.dxx(x, y, t) - ky * ex.dyy(x, y, t) +
             ax(x, y, t) * ex.dx(x, y, t) + ay(x, y, t) * ex.dy(x, y, t);
    };
    REQUIRE(problem_self_test(p, T) < 1e-12);

    const ShiftedProblem sp = make_shifted(p, T);
    CHECK(sp.shifted.initial.value(0.3, 0.7) == 0.0);
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
      const double x = detail::uniform01(rng);
      const double y = detail::uniform01(rng);
      const double t = T * detail::uniform01(rng);
      CHECK(std::abs(sp.shifted.source(x, y, t)) < 1e-12);        // F = 0
      CHECK(std::abs(sp.shifted.exact->value(x, y, t)) < 1e-12);  // w = 0
      CHECK(std::abs(sp.shifted.dirichlet(x, y, t)) < 1e-12);
    }
    CHECK(problem_self_test(sp.shifted, T) < 1e-8);
  }
}
