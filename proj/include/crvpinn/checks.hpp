#pragma once

#include <Eigen/Eigenvalues>

#include <sstream>

#include "crvpinn/loss.hpp"

namespace crvpinn::checks {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline GridField<double> random_field(const Grid& g, std::mt19937_64& rng) {
  GridField<double> f(g);
  for (Eigen::Index p = 0; p < f.values.size(); ++p) {
    f.values[p] = 2.0 * crvpinn::detail::uniform01(rng) - 1.0;
  }
  return f;
}

inline GridField<double> random_spatial_zero_field(const Grid& g, std::mt19937_64& rng) {
  GridField<double> f = random_field(g, rng);
  for (int i = 0; i <= g.nx; ++i)
    for (int j = 0; j <= g.ny; ++j)
      for (int k = 0; k <= g.nt; ++k) {
        if (i == 0 || i == g.nx || j == 0 || j == g.ny) f(i, j, k) = 0.0;
      }
  return f;
}

inline std::string format_sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

}  // namespace detail

/// Dense Gram matrices on small grids must be exactly symmetric and
/// strictly positive definite, and the stencil application must agree
/// with the dense product.
inline CheckResult gram_correctness() {
  double min_eig = std::numeric_limits<double>::infinity();
  double max_asym = 0.0;
  double max_apply_err = 0.0;
  std::mt19937_64 rng(2024);
  for (int n : {2, 3, 4}) {
    const Grid g(n, n, n);
    const auto G = build_gram(g);
    const Matrix<double> dense = dense_gram(G);
    max_asym = std::max(max_asym, (dense - dense.transpose()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Matrix<double>> eig(dense, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
    for (int trial = 0; trial < 5; ++trial) {
      const GridField<double> z = detail::random_field(g, rng);
      const GridField<double> stencil = apply_gram(G, z);
      const Vector<double> direct = dense * z.values;
      max_apply_err =
          std::max(max_apply_err, (stencil.values - direct).norm() / direct.norm());
    }
  }
  CheckResult r;
  r.name = "gram correctness";
  r.pass = max_asym == 0.0 && min_eig > 0.0 && max_apply_err < 1e-12;
  r.detail = "min eig " + detail::format_sci(min_eig) + ", asym " + detail::format_sci(max_asym) +
             ", apply err " + detail::format_sci(max_apply_err);
  return r;
}

/// <A u, z> must equal <u, A^T z> for random pairs.
inline CheckResult adjointness(int n = 8, int pairs = 100) {
  const Grid g(n, n, n);
  const ResidualSystem sys = make_residual_system(g, manufactured_problem("M1"));
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < pairs; ++trial) {
    const GridField<double> u = detail::random_field(g, rng);
    const GridField<double> z = detail::random_field(g, rng);
    const GridField<double> au = sys.apply(u);
    const GridField<double> atz = sys.adjoint(z);
    const double lhs = au.values.dot(z.values);
    const double rhs = u.values.dot(atz.values);
    worst = std::max(worst, std::abs(lhs - rhs) / (au.values.norm() * z.values.norm()));
  }
  CheckResult r;
  r.name = "adjoint identity";
  r.pass = worst < 1e-12;
  r.detail = "max rel mismatch " + detail::format_sci(worst) + " over " + std::to_string(pairs) +
             " pairs";
  return r;
}

/// Discrete integration by parts: for fields vanishing on the lateral
/// walls, (-Lap_xy u, v)_h equals the x/y part of the forward-difference
/// gradient inner product.
inline CheckResult summation_by_parts(int n = 16, int pairs = 10) {
  const Grid g(n, n, n);
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < pairs; ++trial) {
    const GridField<double> u = detail::random_spatial_zero_field(g, rng);
    const GridField<double> v = detail::random_spatial_zero_field(g, rng);
    GridField<double> lap = spatial_laplacian(u);
    lap.values = -lap.values;
    const double lhs = inner_h(lap, v);
    const GridField<double> ux = forward_diff(u, Axis::X);
    const GridField<double> vx = forward_diff(v, Axis::X);
    const GridField<double> uy = forward_diff(u, Axis::Y);
    const GridField<double> vy = forward_diff(v, Axis::Y);
    const double rhs = inner_h(ux, vx) + inner_h(uy, vy);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300}));
  }
  CheckResult r;
  r.name = "summation by parts";
  r.pass = worst < 1e-12;
  r.detail = "max rel mismatch " + detail::format_sci(worst);
  return r;
}

/// Full-path gradient of the Gram-weighted loss against central finite
/// differences. The finite-difference side solves the Gram system with the
/// dense factorization so the oracle does not share the iterative path.
inline CheckResult loss_gradient_check(int n = 5, double step = 1e-6) {
  const Grid g(n, n, n);
  const Problem problem = make_shifted(manufactured_problem("M1"), g.T).shifted;
  const ResidualSystem sys = make_residual_system(g, problem);
  const auto G = build_gram(g);
  const Matrix<double> points = lattice_points<double>(g);
  Mlp<double> mlp = init_mlp({3, 8, 1}, 3);

  const CrvpinnLoss loss = crvpinn_loss(sys, G, mlp, points, 1e-12);
  const Vector<double> analytic = flatten_grads(crvpinn_loss_grad(mlp, points, loss));

  auto dense_loss = [&](const Mlp<double>& m) {
    const GridField<double> u(g, forward(m, points));
    const GridField<double> r = sys.residual(u);
    const GridField<double> z = solve_gram_dense(G, r);
    return r.values.dot(z.values);
  };

  Vector<double> theta = flatten_params(mlp);
  double worst = 0.0;
  for (Eigen::Index p = 0; p < theta.size(); ++p) {
    const double saved = theta[p];
    theta[p] = saved + step;
    unflatten_params(mlp, theta);
    const double fp = dense_loss(mlp);
    theta[p] = saved - step;
    unflatten_params(mlp, theta);
    const double fm = dense_loss(mlp);
    theta[p] = saved;
    const double fd = (fp - fm) / (2.0 * step);
    const double err = std::abs(fd - analytic[p]);
    if (err != 0.0) {
      worst = std::max(worst, err / std::max({std::abs(fd), std::abs(analytic[p]), 1e-12}));
    }
  }
  unflatten_params(mlp, theta);

  CheckResult r;
  r.name = "loss gradient check";
  r.pass = worst < 1e-5;
  r.detail = "max rel error " + detail::format_sci(worst) + " over " +
             std::to_string(theta.size()) + " parameters";
  return r;
}

/// Matrix-free conjugate gradient against the dense Cholesky solve.
inline CheckResult cg_vs_dense(int n = 6, int trials = 5) {
  const Grid g(n, n, n);
  const auto G = build_gram(g);
  std::mt19937_64 rng(21);
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const GridField<double> r = detail::random_field(g, rng);
    const GridField<double> z_cg = solve_gram(G, r, 1e-10);
    const GridField<double> z_dense = solve_gram_dense(G, r);
    worst = std::max(worst, (z_cg.values - z_dense.values).norm() / z_dense.values.norm());
  }
  CheckResult res;
  res.name = "cg vs dense solve";
  res.pass = worst < 1e-8;
  res.detail = "max rel difference " + detail::format_sci(worst);
  return res;
}

/// First-order consistency: the interior residual of the exact M1 field
/// should halve (within 30%) when the lattice resolution doubles.
inline CheckResult residual_consistency(int coarse = 16, int fine = 32) {
  auto sup_residual = [](int n) {
    const Grid g(n, n, n);
    const Problem p = manufactured_problem("M1");
    const ResidualSystem sys = make_residual_system(g, p);
    GridField<double> u(g);
    Eigen::Index q = 0;
    for (int i = 0; i <= g.nx; ++i)
      for (int j = 0; j <= g.ny; ++j)
        for (int k = 0; k <= g.nt; ++k, ++q) {
          u.values[q] = p.exact->value(g.x(i), g.y(j), g.t(k));
        }
    const GridField<double> r = sys.residual(u);
    double sup = 0.0;
    q = 0;
    for (int i = 0; i <= g.nx; ++i)
      for (int j = 0; j <= g.ny; ++j)
        for (int k = 0; k <= g.nt; ++k, ++q) {
          if (sys.classes[q] == PointClass::Interior) sup = std::max(sup, std::abs(r.values[q]));
        }
    return sup;
  };
  const double sup_coarse = sup_residual(coarse);
  const double sup_fine = sup_residual(fine);
  const double ratio = sup_coarse / sup_fine;
  CheckResult r;
  r.name = "residual consistency";
  r.pass = ratio > 1.4 && ratio < 2.6;
  r.detail = "sup " + detail::format_sci(sup_coarse) + " -> " + detail::format_sci(sup_fine) +
             ", ratio " + detail::format_sci(ratio);
  return r;
}

/// The suite behind the `verify` subcommand.
inline std::vector<CheckResult> verify_suite() {
  return {gram_correctness(), adjointness(), summation_by_parts(), loss_gradient_check(),
          cg_vs_dense()};
}

}  // namespace crvpinn::checks
