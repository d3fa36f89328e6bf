#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <sstream>
#include <stdexcept>

#include "crvpinn/grid.hpp"

namespace crvpinn {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gram operator of the lattice test-space inner product: the seven-point
/// space-time Laplacian stencil scaled by 1/(hx hy ht).
///
/// Interior rows carry diagonal 6 and -1 toward each of the six axis
/// neighbors that are themselves interior; rows and columns of
/// non-interior points reduce to the scaled identity, so the operator is
/// symmetric positive definite. The center weight must equal the number of
/// stencil legs: a smaller diagonal (e.g. 4) with six -1 neighbors loses
/// diagonal dominance and with it positive definiteness. It is applied
/// matrix-free; a dense copy is materialized only for small grids
/// (inspection and cross-checks).
template <typename Scalar>
struct GramOperator {
  Grid grid;
};

template <typename Scalar = double>
GramOperator<Scalar> build_gram(const Grid& grid) {
  return GramOperator<Scalar>{grid};
}

template <typename Scalar>
void apply_gram_into(const GramOperator<Scalar>& G, const Vector<Scalar>& z, Vector<Scalar>& out) {
  const Grid& g = G.grid;
  if (z.size() != g.size()) throw std::invalid_argument("apply_gram: size mismatch");
  const Scalar inv = Scalar(1) / static_cast<Scalar>(g.cell_measure());
  out = z * inv;  // non-interior rows; interior rows overwritten below
  const Eigen::Index sx = static_cast<Eigen::Index>(g.ny + 1) * (g.nt + 1);
  const Eigen::Index sy = g.nt + 1;
  for (int i = 1; i < g.nx; ++i)
    for (int j = 1; j < g.ny; ++j) {
      Eigen::Index p = (static_cast<Eigen::Index>(i) * (g.ny + 1) + j) * (g.nt + 1) + 1;
      for (int k = 1; k < g.nt; ++k, ++p) {
        Scalar acc = Scalar(6) * z[p];
        if (i > 1) acc -= z[p - sx];
        if (i < g.nx - 1) acc -= z[p + sx];
        if (j > 1) acc -= z[p - sy];
        if (j < g.ny - 1) acc -= z[p + sy];
        if (k > 1) acc -= z[p - 1];
        if (k < g.nt - 1) acc -= z[p + 1];
        out[p] = acc * inv;
      }
    }
}

template <typename Scalar>
GridField<Scalar> apply_gram(const GramOperator<Scalar>& G, const GridField<Scalar>& z) {
  GridField<Scalar> out(G.grid);
  apply_gram_into(G, z.values, out.values);
  return out;
}

/// Dense copy of the Gram matrix; limited to small grids.
template <typename Scalar>
Matrix<Scalar> dense_gram(const GramOperator<Scalar>& G, Eigen::Index max_points = 1728) {
  const Grid& g = G.grid;
  const Eigen::Index n = g.size();
  if (n > max_points) {
    throw std::invalid_argument("dense_gram: grid too large to materialize");
  }
  const Scalar inv = Scalar(1) / static_cast<Scalar>(g.cell_measure());
  Matrix<Scalar> dense = Matrix<Scalar>::Zero(n, n);
  for (Eigen::Index p = 0; p < n; ++p) dense(p, p) = inv;
  for (int i = 1; i < g.nx; ++i)
    for (int j = 1; j < g.ny; ++j)
      for (int k = 1; k < g.nt; ++k) {
        const Eigen::Index p = linear_index(g, i, j, k);
        dense(p, p) = Scalar(6) * inv;
        auto couple = [&](int ii, int jj, int kk) {
          if (G.grid.interior(ii, jj, kk)) dense(p, linear_index(g, ii, jj, kk)) = -inv;
        };
        couple(i - 1, j, k);
        couple(i + 1, j, k);
        couple(i, j - 1, k);
        couple(i, j + 1, k);
        couple(i, j, k - 1);
        couple(i, j, k + 1);
      }
  return dense;
}

struct CgResult {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

/// Matrix-free conjugate gradient solve of G z = r to a relative l2
/// residual of `tol`. `z` doubles as the warm start. Throws SolverError if
/// the iteration cap (10 x point count by default) is exhausted.
template <typename Scalar>
CgResult solve_gram(const GramOperator<Scalar>& G, const GridField<Scalar>& r,
                    GridField<Scalar>& z, Scalar tol, long max_iter = -1) {
  if (!(tol > Scalar(0))) throw std::invalid_argument("solve_gram: tolerance must be positive");
  const Grid& g = G.grid;
  detail::require_same_grid(r, z);
  if (!(r.grid == g)) throw std::invalid_argument("solve_gram: field grid mismatch");

  const Eigen::Index n = g.size();
  if (max_iter < 0) max_iter = 10 * static_cast<long>(n);
  const Scalar rhs_norm = r.values.norm();
  if (rhs_norm == Scalar(0)) {
    z.values.setZero();
    return CgResult{0, 0.0, true};
  }
  const Scalar target = tol * rhs_norm;

  Vector<Scalar> gz(n), res(n), dir(n), gdir(n);
  apply_gram_into(G, z.values, gz);
  res = r.values - gz;
  dir = res;
  Scalar rho = res.squaredNorm();

  long it = 0;
  while (it < max_iter) {
    if (std::sqrt(rho) <= target) {
      // Recurrence says done; confirm with a true residual before accepting.
      apply_gram_into(G, z.values, gz);
      res = r.values - gz;
      rho = res.squaredNorm();
      if (std::sqrt(rho) <= target) {
        return CgResult{static_cast<int>(it), static_cast<double>(std::sqrt(rho) / rhs_norm), true};
      }
      dir = res;
    }
    apply_gram_into(G, dir, gdir);
    const Scalar alpha = rho / dir.dot(gdir);
    z.values += alpha * dir;
    res -= alpha * gdir;
    const Scalar rho_next = res.squaredNorm();
    dir = res + (rho_next / rho) * dir;
    rho = rho_next;
    ++it;
  }
  apply_gram_into(G, z.values, gz);
  const double achieved = static_cast<double>((r.values - gz).norm() / rhs_norm);
  std::ostringstream msg;
  msg << "solve_gram: conjugate gradient hit the iteration cap (" << max_iter
      << ") with relative residual " << achieved;
  throw SolverError(msg.str());
}

template <typename Scalar>
GridField<Scalar> solve_gram(const GramOperator<Scalar>& G, const GridField<Scalar>& r,
                             Scalar tol) {
  GridField<Scalar> z(G.grid);
  solve_gram(G, r, z, tol);
  return z;
}

/// Dense Cholesky solve; the cross-check path for small grids.
template <typename Scalar>
GridField<Scalar> solve_gram_dense(const GramOperator<Scalar>& G, const GridField<Scalar>& r) {
  const Matrix<Scalar> dense = dense_gram(G);
  Eigen::LLT<Matrix<Scalar>> llt(dense);
  if (llt.info() != Eigen::Success) {
    throw SolverError("solve_gram_dense: Cholesky factorization failed");
  }
  GridField<Scalar> z(G.grid);
  z.values = llt.solve(r.values);
  return z;
}

}  // namespace crvpinn
