#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace crvpinn {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class Axis { X, Y, T };

/// Regular collocation lattice over (0,1)^2 x (0,T).
///
/// nx, ny, nt are cell counts per axis; the lattice carries
/// (nx+1)(ny+1)(nt+1) points at (i*hx, j*hy, k*ht).
struct Grid {
  int nx = 0;
  int ny = 0;
  int nt = 0;
  double T = 1.0;
  double hx = 0.0;
  double hy = 0.0;
  double ht = 0.0;

  Grid() = default;
  Grid(int nx_, int ny_, int nt_, double T_ = 1.0)
      : nx(nx_), ny(ny_), nt(nt_), T(T_) {
    if (nx < 1 || ny < 1 || nt < 1) {
      throw std::invalid_argument("Grid: cell counts must be >= 1");
    }
    if (!(T > 0.0)) {
      throw std::invalid_argument("Grid: final time must be positive");
    }
    hx = 1.0 / nx;
    hy = 1.0 / ny;
    ht = T / nt;
  }

  int points_x() const { return nx + 1; }
  int points_y() const { return ny + 1; }
  int points_t() const { return nt + 1; }
  Eigen::Index size() const {
    return static_cast<Eigen::Index>(points_x()) * points_y() * points_t();
  }
  double cell_measure() const { return hx * hy * ht; }

  double x(int i) const { return i * hx; }
  double y(int j) const { return j * hy; }
  double t(int k) const { return k * ht; }

  bool spatial_interior(int i, int j) const {
    return i > 0 && i < nx && j > 0 && j < ny;
  }
  /// Interior in the residual sense: strictly inside space and time.
  bool interior(int i, int j, int k) const {
    return spatial_interior(i, j) && k > 0 && k < nt;
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.nx == b.nx && a.ny == b.ny && a.nt == b.nt && a.T == b.T;
  }
};

/// Flat index of lattice point (i,j,k); x-major, then y, then t.
inline Eigen::Index linear_index(const Grid& g, int i, int j, int k) {
  if (i < 0 || i > g.nx || j < 0 || j > g.ny || k < 0 || k > g.nt) {
    throw std::out_of_range("linear_index: lattice index out of range");
  }
  return (static_cast<Eigen::Index>(i) * (g.ny + 1) + j) * (g.nt + 1) + k;
}

/// One scalar value per lattice point, ordered by linear_index.
template <typename Scalar>
struct GridField {
  Grid grid;
  Vector<Scalar> values;

  GridField() = default;
  explicit GridField(const Grid& g) : grid(g), values(Vector<Scalar>::Zero(g.size())) {}
  GridField(const Grid& g, Vector<Scalar> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) {
      throw std::invalid_argument("GridField: value count does not match grid");
    }
  }

  Scalar& operator()(int i, int j, int k) { return values[linear_index(grid, i, j, k)]; }
  Scalar operator()(int i, int j, int k) const { return values[linear_index(grid, i, j, k)]; }
};

namespace detail {
template <typename Scalar>
void require_same_grid(const GridField<Scalar>& a, const GridField<Scalar>& b) {
  if (!(a.grid == b.grid)) {
    throw std::invalid_argument("fields live on different grids");
  }
}
}  // namespace detail

/// Lattice coordinates as a 3 x n matrix (rows x, y, t), columns in
/// linear_index order. This is the batch layout the network consumes.
template <typename Scalar = double>
Matrix<Scalar> lattice_points(const Grid& g) {
  Matrix<Scalar> pts(3, g.size());
  Eigen::Index p = 0;
  for (int i = 0; i <= g.nx; ++i)
    for (int j = 0; j <= g.ny; ++j)
      for (int k = 0; k <= g.nt; ++k, ++p) {
        pts(0, p) = static_cast<Scalar>(g.x(i));
        pts(1, p) = static_cast<Scalar>(g.y(j));
        pts(2, p) = static_cast<Scalar>(g.t(k));
      }
  return pts;
}

/// Forward difference along an axis, (u[p+1]-u[p])/h.
///
/// Entries at the top index of the axis have no +1 neighbor; they are
/// stored as 0 and never read by consumers (all reductions that touch
/// them weight the slot by a factor that is itself zero there).
template <typename Scalar>
GridField<Scalar> forward_diff(const GridField<Scalar>& u, Axis axis) {
  const Grid& g = u.grid;
  GridField<Scalar> out(g);
  const int di = axis == Axis::X ? 1 : 0;
  const int dj = axis == Axis::Y ? 1 : 0;
  const int dk = axis == Axis::T ? 1 : 0;
  const Scalar inv_h = Scalar(1) / static_cast<Scalar>(axis == Axis::X   ? g.hx
                                                       : axis == Axis::Y ? g.hy
                                                                         : g.ht);
  const int imax = g.nx - di, jmax = g.ny - dj, kmax = g.nt - dk;
  for (int i = 0; i <= imax; ++i)
    for (int j = 0; j <= jmax; ++j)
      for (int k = 0; k <= kmax; ++k) {
        const auto p = linear_index(g, i, j, k);
        const auto q = linear_index(g, i + di, j + dj, k + dk);
        out.values[p] = (u.values[q] - u.values[p]) * inv_h;
      }
  return out;
}

/// Backward difference along an axis, (u[p]-u[p-1])/h; zero at index 0.
template <typename Scalar>
GridField<Scalar> backward_diff(const GridField<Scalar>& u, Axis axis) {
  const Grid& g = u.grid;
  GridField<Scalar> out(g);
  const int di = axis == Axis::X ? 1 : 0;
  const int dj = axis == Axis::Y ? 1 : 0;
  const int dk = axis == Axis::T ? 1 : 0;
  const Scalar inv_h = Scalar(1) / static_cast<Scalar>(axis == Axis::X   ? g.hx
                                                       : axis == Axis::Y ? g.hy
                                                                         : g.ht);
  for (int i = di; i <= g.nx; ++i)
    for (int j = dj; j <= g.ny; ++j)
      for (int k = dk; k <= g.nt; ++k) {
        const auto p = linear_index(g, i, j, k);
        const auto q = linear_index(g, i - di, j - dj, k - dk);
        out.values[p] = (u.values[p] - u.values[q]) * inv_h;
      }
  return out;
}

/// Spatial five-point Laplacian (x and y second differences only),
/// defined at spatially interior points for every time index; zero
/// elsewhere.
template <typename Scalar>
GridField<Scalar> spatial_laplacian(const GridField<Scalar>& u) {
  const Grid& g = u.grid;
  GridField<Scalar> out(g);
  const Scalar ihx2 = Scalar(1) / static_cast<Scalar>(g.hx * g.hx);
  const Scalar ihy2 = Scalar(1) / static_cast<Scalar>(g.hy * g.hy);
  const Eigen::Index sx = static_cast<Eigen::Index>(g.ny + 1) * (g.nt + 1);
  const Eigen::Index sy = g.nt + 1;
  for (int i = 1; i < g.nx; ++i)
    for (int j = 1; j < g.ny; ++j) {
      Eigen::Index p = linear_index(g, i, j, 0);
      for (int k = 0; k <= g.nt; ++k, ++p) {
        const Scalar uxx =
            (u.values[p + sx] - Scalar(2) * u.values[p] + u.values[p - sx]) * ihx2;
        const Scalar uyy =
            (u.values[p + sy] - Scalar(2) * u.values[p] + u.values[p - sy]) * ihy2;
        out.values[p] = uxx + uyy;
      }
    }
  return out;
}

/// Discrete L2 inner product, hx*hy*ht * sum_p u(p) v(p).
template <typename Scalar>
Scalar inner_h(const GridField<Scalar>& u, const GridField<Scalar>& v) {
  detail::require_same_grid(u, v);
  return static_cast<Scalar>(u.grid.cell_measure()) * u.values.dot(v.values);
}

template <typename Scalar>
Scalar norm_h(const GridField<Scalar>& u) {
  return std::sqrt(inner_h(u, u));
}

/// Discrete H1-type seminorm: root of the summed squared forward
/// differences along x, y and t, measured with inner_h. Invalid slots of
/// each difference field hold 0 and therefore drop out of the sum.
template <typename Scalar>
Scalar norm_grad_h(const GridField<Scalar>& u) {
  const GridField<Scalar> dx = forward_diff(u, Axis::X);
  const GridField<Scalar> dy = forward_diff(u, Axis::Y);
  const GridField<Scalar> dt = forward_diff(u, Axis::T);
  return std::sqrt(inner_h(dx, dx) + inner_h(dy, dy) + inner_h(dt, dt));
}

}  // namespace crvpinn
