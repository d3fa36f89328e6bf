#pragma once

#include <stdexcept>

#include "crvpinn/gram.hpp"
#include "crvpinn/grid.hpp"
#include "crvpinn/mlp.hpp"
#include "crvpinn/problem.hpp"
#include "crvpinn/residual.hpp"

namespace crvpinn {

/// Collocation sets for the pointwise loss: strictly interior points,
/// lateral-wall points, and initial-plane points, each as a 3 x n batch.
struct CollocationSets {
  Matrix<double> interior;
  Matrix<double> boundary;
  Matrix<double> initial;
};

/// The lattice split by point class. This is the default sampler, so the
/// pointwise and Gram-weighted losses see the same collocation points.
inline CollocationSets lattice_collocation(const Grid& g) {
  Eigen::Index n_int = 0, n_bc = 0, n_init = 0;
  for (int i = 0; i <= g.nx; ++i)
    for (int j = 0; j <= g.ny; ++j)
      for (int k = 0; k <= g.nt; ++k) {
        switch (classify(g, i, j, k)) {
          case PointClass::Interior: ++n_int; break;
          case PointClass::SpatialBoundary: ++n_bc; break;
          case PointClass::InitialPlane: ++n_init; break;
          case PointClass::FinalPlane: break;
        }
      }
  CollocationSets sets;
  sets.interior.resize(3, n_int);
  sets.boundary.resize(3, n_bc);
  sets.initial.resize(3, n_init);
  Eigen::Index ci = 0, cb = 0, c0 = 0;
  for (int i = 0; i <= g.nx; ++i)
    for (int j = 0; j <= g.ny; ++j)
      for (int k = 0; k <= g.nt; ++k) {
        const double x = g.x(i), y = g.y(j), t = g.t(k);
        switch (classify(g, i, j, k)) {
          case PointClass::Interior:
            sets.interior.col(ci++) << x, y, t;
            break;
          case PointClass::SpatialBoundary:
            sets.boundary.col(cb++) << x, y, t;
            break;
          case PointClass::InitialPlane:
            sets.initial.col(c0++) << x, y, t;
            break;
          case PointClass::FinalPlane:
            break;
        }
      }
  return sets;
}

/// Uniform-random collocation batches over the open domain, the lateral
/// walls, and the initial plane.
inline CollocationSets random_collocation(const Grid& g, Eigen::Index n_interior,
                                          Eigen::Index n_boundary, Eigen::Index n_initial,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CollocationSets sets;
  sets.interior.resize(3, n_interior);
  for (Eigen::Index p = 0; p < n_interior; ++p) {
    sets.interior.col(p) << detail::uniform01(rng), detail::uniform01(rng),
        g.T * detail::uniform01(rng);
  }
  sets.boundary.resize(3, n_boundary);
  for (Eigen::Index p = 0; p < n_boundary; ++p) {
    const int wall = static_cast<int>(rng() % 4);
    const double s = detail::uniform01(rng);
    const double t = g.T * detail::uniform01(rng);
    switch (wall) {
      case 0: sets.boundary.col(p) << 0.0, s, t; break;
      case 1: sets.boundary.col(p) << 1.0, s, t; break;
      case 2: sets.boundary.col(p) << s, 0.0, t; break;
      default: sets.boundary.col(p) << s, 1.0, t; break;
    }
  }
  sets.initial.resize(3, n_initial);
  for (Eigen::Index p = 0; p < n_initial; ++p) {
    sets.initial.col(p) << detail::uniform01(rng), detail::uniform01(rng), 0.0;
  }
  return sets;
}

/// Strong residual at the interior batch, from per-point values and input
/// derivatives. Factored out so tests can feed analytically known
/// derivative channels.
inline Vector<double> pointwise_residual(const Problem& problem, const Matrix<double>& points,
                                         const PointDerivatives<double>& d) {
  const Eigen::Index n = points.cols();
  Vector<double> r(n);
  for (Eigen::Index p = 0; p < n; ++p) {
    const double x = points(0, p), y = points(1, p), t = points(2, p);
    r[p] = d.ut[p] + problem.advection_x(x, y, t) * d.ux[p] +
           problem.advection_y(x, y, t) * d.uy[p] - problem.kx * d.uxx[p] -
           problem.ky * d.uyy[p] - problem.source(x, y, t);
  }
  return r;
}

/// Pointwise (strong-form) loss value plus the cotangents that drive the
/// parameter pullback: derivative channels on the interior batch, value
/// cotangents on the data batches.
struct PinnLoss {
  double value = 0.0;
  double interior_term = 0.0;
  double initial_term = 0.0;
  double boundary_term = 0.0;
  ChannelCotangents<double> interior_cot;
  Vector<double> initial_cot;
  Vector<double> boundary_cot;
};

/// Assembles the pointwise loss from precomputed network outputs:
/// mean squared strong residual over the interior batch plus mean squared
/// data mismatch on the initial plane and the lateral walls.
inline PinnLoss pinn_loss_from_values(const Problem& problem, const CollocationSets& sets,
                                      const PointDerivatives<double>& interior,
                                      const Vector<double>& u_initial,
                                      const Vector<double>& u_boundary) {
  const Eigen::Index n_int = sets.interior.cols();
  const Eigen::Index n_init = sets.initial.cols();
  const Eigen::Index n_bc = sets.boundary.cols();
  if (n_int == 0 || n_init == 0 || n_bc == 0) {
    throw std::invalid_argument("pinn_loss: empty collocation set");
  }

  PinnLoss out;
  const Vector<double> r = pointwise_residual(problem, sets.interior, interior);
  out.interior_term = r.squaredNorm() / static_cast<double>(n_int);

  Vector<double> r_init(n_init);
  for (Eigen::Index p = 0; p < n_init; ++p) {
    r_init[p] = u_initial[p] - problem.initial.value(sets.initial(0, p), sets.initial(1, p));
  }
  out.initial_term = r_init.squaredNorm() / static_cast<double>(n_init);

  Vector<double> r_bc(n_bc);
  for (Eigen::Index p = 0; p < n_bc; ++p) {
    r_bc[p] = u_boundary[p] - problem.dirichlet(sets.boundary(0, p), sets.boundary(1, p),
                                                sets.boundary(2, p));
  }
  out.boundary_term = r_bc.squaredNorm() / static_cast<double>(n_bc);

  out.value = out.interior_term + out.initial_term + out.boundary_term;

  // d(mean r^2)/dr = 2 r / n, pushed through the residual's channel weights.
  const Vector<double> rbar = (2.0 / static_cast<double>(n_int)) * r;
  out.interior_cot.ut = rbar;
  out.interior_cot.ux.resize(n_int);
  out.interior_cot.uy.resize(n_int);
  for (Eigen::Index p = 0; p < n_int; ++p) {
    const double x = sets.interior(0, p), y = sets.interior(1, p), t = sets.interior(2, p);
    out.interior_cot.ux[p] = problem.advection_x(x, y, t) * rbar[p];
    out.interior_cot.uy[p] = problem.advection_y(x, y, t) * rbar[p];
  }
  out.interior_cot.uxx = -problem.kx * rbar;
  out.interior_cot.uyy = -problem.ky * rbar;
  out.initial_cot = (2.0 / static_cast<double>(n_init)) * r_init;
  out.boundary_cot = (2.0 / static_cast<double>(n_bc)) * r_bc;
  return out;
}

inline PinnLoss pinn_loss(const Problem& problem, const Mlp<double>& mlp,
                          const CollocationSets& sets) {
  const PointDerivatives<double> interior = forward_with_derivatives(mlp, sets.interior);
  const Vector<double> u_init = forward(mlp, sets.initial);
  const Vector<double> u_bc = forward(mlp, sets.boundary);
  return pinn_loss_from_values(problem, sets, interior, u_init, u_bc);
}

/// Parameter gradient of the pointwise loss.
inline ParamGrads<double> pinn_loss_grad(const Mlp<double>& mlp, const CollocationSets& sets,
                                         const PinnLoss& loss) {
  ParamGrads<double> grads(mlp);
  backward_params_channels_into(mlp, sets.interior, loss.interior_cot, grads);
  backward_params_into(mlp, sets.initial, loss.initial_cot, grads);
  backward_params_into(mlp, sets.boundary, loss.boundary_cot, grads);
  return grads;
}

/// Gram-weighted collocation loss r^T G^{-1} r together with the pieces a
/// training step needs: the residual, its Riesz representative
/// z = G^{-1} r, and the cotangent dL/du = 2 A^T z.
struct CrvpinnLoss {
  double value = 0.0;
  GridField<double> residual;
  GridField<double> riesz;
  GridField<double> du;
  CgResult cg;
};

/// Evaluates the robust loss for the network field sampled on the lattice.
/// `points` must be lattice_points(system.grid); `riesz_warm`, when given,
/// provides the conjugate-gradient warm start and receives the new
/// representative.
inline CrvpinnLoss crvpinn_loss(const ResidualSystem& system, const GramOperator<double>& gram,
                                const Mlp<double>& mlp, const Matrix<double>& points,
                                double cg_tol, GridField<double>* riesz_warm = nullptr) {
  CrvpinnLoss out;
  GridField<double> u(system.grid, forward(mlp, points));
  out.residual = system.residual(u);
  out.riesz = riesz_warm ? *riesz_warm : GridField<double>(system.grid);
  out.cg = solve_gram(gram, out.residual, out.riesz, cg_tol);
  out.value = out.residual.values.dot(out.riesz.values);
  out.du = system.adjoint(out.riesz);
  out.du.values *= 2.0;
  if (riesz_warm) *riesz_warm = out.riesz;
  return out;
}

inline CrvpinnLoss crvpinn_loss(const ResidualSystem& system, const GramOperator<double>& gram,
                                const Mlp<double>& mlp, double cg_tol = 1e-10) {
  const Matrix<double> points = lattice_points<double>(system.grid);
  return crvpinn_loss(system, gram, mlp, points, cg_tol);
}

/// Parameter gradient of the robust loss: the lattice cotangent dL/du
/// pulled back through the network.
inline ParamGrads<double> crvpinn_loss_grad(const Mlp<double>& mlp, const Matrix<double>& points,
                                            const CrvpinnLoss& loss) {
  return backward_params(mlp, points, loss.du.values);
}

}  // namespace crvpinn
