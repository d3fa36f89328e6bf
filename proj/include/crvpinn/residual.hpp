#pragma once

#include <vector>

#include "crvpinn/grid.hpp"
#include "crvpinn/problem.hpp"

namespace crvpinn {

/// Role of a lattice point in the residual vector. A point on the lateral
/// walls is a spatial-boundary point for every time index, including the
/// corners shared with the initial and final planes.
enum class PointClass : unsigned char { Interior, SpatialBoundary, InitialPlane, FinalPlane };

inline PointClass classify(const Grid& g, int i, int j, int k) {
  if (i == 0 || i == g.nx || j == 0 || j == g.ny) return PointClass::SpatialBoundary;
  if (k == 0) return PointClass::InitialPlane;
  if (k == g.nt) return PointClass::FinalPlane;
  return PointClass::Interior;
}

/// Affine residual map r(u) = A u - c on a fixed lattice.
///
/// Interior rows carry the strong residual of the transport equation with
/// forward time/advection differences and the spatial five-point
/// Laplacian; spatial-boundary rows carry u - g, initial rows u - u0,
/// final-plane rows are zero. Coefficient and data fields are sampled once
/// at construction; they do not depend on the network.
struct ResidualSystem {
  Grid grid;
  double kx = 0.0;
  double ky = 0.0;
  std::vector<PointClass> classes;
  GridField<double> beta_x;
  GridField<double> beta_y;
  GridField<double> offset;  // c: source at interior rows, data elsewhere

  /// Linear part A u.
  GridField<double> apply(const GridField<double>& u) const {
    detail::require_same_grid(u, offset);
    const Grid& g = grid;
    GridField<double> out(g);
    const Eigen::Index sx = static_cast<Eigen::Index>(g.ny + 1) * (g.nt + 1);
    const Eigen::Index sy = g.nt + 1;
    const double iht = 1.0 / g.ht, ihx = 1.0 / g.hx, ihy = 1.0 / g.hy;
    const double ihx2 = ihx * ihx, ihy2 = ihy * ihy;
    Eigen::Index p = 0;
    for (int i = 0; i <= g.nx; ++i)
      for (int j = 0; j <= g.ny; ++j)
        for (int k = 0; k <= g.nt; ++k, ++p) {
          switch (classes[p]) {
            case PointClass::Interior: {
              const double up = u.values[p];
              const double dt = (u.values[p + 1] - up) * iht;
              const double dx = (u.values[p + sx] - up) * ihx;
              const double dy = (u.values[p + sy] - up) * ihy;
              const double lxx = (u.values[p + sx] - 2.0 * up + u.values[p - sx]) * ihx2;
              const double lyy = (u.values[p + sy] - 2.0 * up + u.values[p - sy]) * ihy2;
              out.values[p] = dt + beta_x.values[p] * dx + beta_y.values[p] * dy -
                              kx * lxx - ky * lyy;
              break;
            }
            case PointClass::SpatialBoundary:
            case PointClass::InitialPlane:
              out.values[p] = u.values[p];
              break;
            case PointClass::FinalPlane:
              out.values[p] = 0.0;
              break;
          }
        }
    return out;
  }

  /// Residual r(u) = A u - c.
  GridField<double> residual(const GridField<double>& u) const {
    GridField<double> r = apply(u);
    r.values -= offset.values;
    return r;
  }

  /// Transpose action A^T z, by scattering each row's coefficients.
  GridField<double> adjoint(const GridField<double>& z) const {
    detail::require_same_grid(z, offset);
    const Grid& g = grid;
    GridField<double> out(g);
    const Eigen::Index sx = static_cast<Eigen::Index>(g.ny + 1) * (g.nt + 1);
    const Eigen::Index sy = g.nt + 1;
    const double iht = 1.0 / g.ht, ihx = 1.0 / g.hx, ihy = 1.0 / g.hy;
    const double ihx2 = ihx * ihx, ihy2 = ihy * ihy;
    Eigen::Index p = 0;
    for (int i = 0; i <= g.nx; ++i)
      for (int j = 0; j <= g.ny; ++j)
        for (int k = 0; k <= g.nt; ++k, ++p) {
          const double zp = z.values[p];
          if (zp == 0.0) continue;
          switch (classes[p]) {
            case PointClass::Interior: {
              const double bx = beta_x.values[p];
              const double by = beta_y.values[p];
              out.values[p + 1] += zp * iht;
              out.values[p + sx] += zp * (bx * ihx - kx * ihx2);
              out.values[p + sy] += zp * (by * ihy - ky * ihy2);
              out.values[p - sx] -= zp * kx * ihx2;
              out.values[p - sy] -= zp * ky * ihy2;
              out.values[p] += zp * (-iht - bx * ihx - by * ihy + 2.0 * kx * ihx2 + 2.0 * ky * ihy2);
              break;
            }
            case PointClass::SpatialBoundary:
            case PointClass::InitialPlane:
              out.values[p] += zp;
              break;
            case PointClass::FinalPlane:
              break;
          }
        }
    return out;
  }
};

/// Samples coefficients and row data for `problem` on `grid`. For the
/// shifted formulation, pass the shifted problem; the assembly itself is
/// the same.
inline ResidualSystem make_residual_system(const Grid& grid, const Problem& problem) {
  ResidualSystem sys;
  sys.grid = grid;
  sys.kx = problem.kx;
  sys.ky = problem.ky;
  sys.classes.resize(static_cast<std::size_t>(grid.size()));
  sys.beta_x = GridField<double>(grid);
  sys.beta_y = GridField<double>(grid);
  sys.offset = GridField<double>(grid);
  Eigen::Index p = 0;
  for (int i = 0; i <= grid.nx; ++i)
    for (int j = 0; j <= grid.ny; ++j)
      for (int k = 0; k <= grid.nt; ++k, ++p) {
        const double x = grid.x(i), y = grid.y(j), t = grid.t(k);
        const PointClass cls = classify(grid, i, j, k);
        sys.classes[p] = cls;
        sys.beta_x.values[p] = problem.advection_x(x, y, t);
        sys.beta_y.values[p] = problem.advection_y(x, y, t);
        switch (cls) {
          case PointClass::Interior:
            sys.offset.values[p] = problem.source(x, y, t);
            break;
          case PointClass::SpatialBoundary:
            sys.offset.values[p] = problem.dirichlet(x, y, t);
            break;
          case PointClass::InitialPlane:
            sys.offset.values[p] = problem.initial.value(x, y);
            break;
          case PointClass::FinalPlane:
            sys.offset.values[p] = 0.0;
            break;
        }
      }
  return sys;
}

}  // namespace crvpinn
