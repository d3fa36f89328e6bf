#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "crvpinn/grid.hpp"

namespace crvpinn {

namespace detail {
/// Uniform draw in [0,1) built from the top 53 bits of the engine output,
/// so the stream does not depend on the standard library's
/// uniform_real_distribution implementation.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
}  // namespace detail

/// Fully connected scalar network u(x,y,t): 3 inputs, tanh hidden layers,
/// identity output. Parameters are reproducible from (layer_sizes, seed).
template <typename Scalar>
struct Mlp {
  std::vector<int> layer_sizes;
  std::vector<Matrix<Scalar>> weights;  // weights[l] has shape (sizes[l+1], sizes[l])
  std::vector<Vector<Scalar>> biases;
  std::uint64_t seed = 0;

  int num_layers() const { return static_cast<int>(weights.size()); }
};

/// Parameter-shaped gradient accumulator.
template <typename Scalar>
struct ParamGrads {
  std::vector<Matrix<Scalar>> weights;
  std::vector<Vector<Scalar>> biases;

  ParamGrads() = default;
  explicit ParamGrads(const Mlp<Scalar>& mlp) {
    weights.reserve(mlp.weights.size());
    biases.reserve(mlp.biases.size());
    for (const auto& w : mlp.weights) weights.push_back(Matrix<Scalar>::Zero(w.rows(), w.cols()));
    for (const auto& b : mlp.biases) biases.push_back(Vector<Scalar>::Zero(b.size()));
  }

  void set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
  }
};

inline std::int64_t param_count(const std::vector<int>& layer_sizes) {
  std::int64_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += static_cast<std::int64_t>(layer_sizes[l + 1]) * layer_sizes[l] + layer_sizes[l + 1];
  }
  return n;
}

template <typename Scalar>
std::int64_t param_count(const Mlp<Scalar>& mlp) {
  return param_count(mlp.layer_sizes);
}

/// Builds a network with fan-in-scaled uniform weights, U(-1/sqrt(in), 1/sqrt(in)),
/// and zero biases. The draw order is fixed (layer by layer, weights row-major,
/// then bias), so a given (layer_sizes, seed) pair always yields the same
/// parameters.
template <typename Scalar = double>
Mlp<Scalar> init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("init_mlp: need at least input and output layer");
  }
  if (layer_sizes.front() != 3 || layer_sizes.back() != 1) {
    throw std::invalid_argument("init_mlp: layer sizes must start at 3 and end at 1");
  }
  for (int s : layer_sizes) {
    if (s < 1) throw std::invalid_argument("init_mlp: layer sizes must be positive");
  }

  Mlp<Scalar> mlp;
  mlp.layer_sizes = layer_sizes;
  mlp.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int in = layer_sizes[l];
    const int out = layer_sizes[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    Matrix<Scalar> w(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c)
        w(r, c) = static_cast<Scalar>(scale * (2.0 * detail::uniform01(rng) - 1.0));
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(Vector<Scalar>::Zero(out));
  }
  return mlp;
}

/// Flat parameter vector: layer by layer, weight matrix row-major, then bias.
/// The same order is used by the checkpoint file and the optimizer state.
template <typename Scalar>
Vector<Scalar> flatten_params(const Mlp<Scalar>& mlp) {
  Vector<Scalar> flat(param_count(mlp));
  Eigen::Index p = 0;
  for (int l = 0; l < mlp.num_layers(); ++l) {
    const auto& w = mlp.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat[p++] = w(r, c);
    for (Eigen::Index r = 0; r < mlp.biases[l].size(); ++r) flat[p++] = mlp.biases[l][r];
  }
  return flat;
}

template <typename Scalar>
void unflatten_params(Mlp<Scalar>& mlp, const Vector<Scalar>& flat) {
  if (flat.size() != param_count(mlp)) {
    throw std::invalid_argument("unflatten_params: size mismatch");
  }
  Eigen::Index p = 0;
  for (int l = 0; l < mlp.num_layers(); ++l) {
    auto& w = mlp.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[p++];
    for (Eigen::Index r = 0; r < mlp.biases[l].size(); ++r) mlp.biases[l][r] = flat[p++];
  }
}

template <typename Scalar>
Vector<Scalar> flatten_grads(const ParamGrads<Scalar>& g) {
  Eigen::Index n = 0;
  for (const auto& w : g.weights) n += w.size();
  for (const auto& b : g.biases) n += b.size();
  Vector<Scalar> flat(n);
  Eigen::Index p = 0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    const auto& w = g.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat[p++] = w(r, c);
    for (Eigen::Index r = 0; r < g.biases[l].size(); ++r) flat[p++] = g.biases[l][r];
  }
  return flat;
}

namespace detail {
constexpr Eigen::Index kMlpBlock = 8192;  // column block bound on activation storage
}

/// Network values at a 3 x n batch of points.
template <typename Scalar>
Vector<Scalar> forward(const Mlp<Scalar>& mlp, const Matrix<Scalar>& points) {
  if (points.rows() != 3) throw std::invalid_argument("forward: points must be 3 x n");
  const Eigen::Index n = points.cols();
  Vector<Scalar> out(n);
  const int L = mlp.num_layers();
  Matrix<Scalar> a, z;
  for (Eigen::Index begin = 0; begin < n; begin += detail::kMlpBlock) {
    const Eigen::Index len = std::min(detail::kMlpBlock, n - begin);
    a = points.middleCols(begin, len);
    for (int l = 0; l < L; ++l) {
      z.noalias() = mlp.weights[l] * a;
      z.colwise() += mlp.biases[l];
      if (l + 1 < L) {
        a = z.array().tanh().matrix();
      } else {
        a.swap(z);
      }
    }
    out.segment(begin, len) = a.row(0).transpose();
  }
  return out;
}

/// Gradient of sum_p cot_p * u(p) with respect to the parameters
/// (reverse-mode accumulation through the layers). Adds into `grads`.
template <typename Scalar>
void backward_params_into(const Mlp<Scalar>& mlp, const Matrix<Scalar>& points,
                          const Vector<Scalar>& cotangents, ParamGrads<Scalar>& grads) {
  if (points.rows() != 3) throw std::invalid_argument("backward_params: points must be 3 x n");
  if (points.cols() != cotangents.size()) {
    throw std::invalid_argument("backward_params: cotangent count does not match points");
  }
  const int L = mlp.num_layers();
  const Eigen::Index n = points.cols();
  std::vector<Matrix<Scalar>> acts(L + 1);
  Matrix<Scalar> z, delta, delta_prev;
  for (Eigen::Index begin = 0; begin < n; begin += detail::kMlpBlock) {
    const Eigen::Index len = std::min(detail::kMlpBlock, n - begin);
    acts[0] = points.middleCols(begin, len);
    for (int l = 0; l < L; ++l) {
      z.noalias() = mlp.weights[l] * acts[l];
      z.colwise() += mlp.biases[l];
      acts[l + 1] = (l + 1 < L) ? z.array().tanh().matrix() : z;
    }
    delta = cotangents.segment(begin, len).transpose();
    for (int l = L - 1; l >= 0; --l) {
      grads.weights[l].noalias() += delta * acts[l].transpose();
      grads.biases[l] += delta.rowwise().sum();
      if (l > 0) {
        delta_prev.noalias() = mlp.weights[l].transpose() * delta;
        delta_prev.array() *= Scalar(1) - acts[l].array().square();
        delta.swap(delta_prev);
      }
    }
  }
}

template <typename Scalar>
ParamGrads<Scalar> backward_params(const Mlp<Scalar>& mlp,
                                   const Matrix<Scalar>& points,
                                   const Vector<Scalar>& cotangents) {
  ParamGrads<Scalar> grads(mlp);
  backward_params_into(mlp, points, cotangents, grads);
  return grads;
}

/// Network value and the input derivatives that enter the strong residual:
/// u, u_x, u_y, u_t, u_xx, u_yy, one entry per point.
template <typename Scalar>
struct PointDerivatives {
  Vector<Scalar> u, ux, uy, ut, uxx, uyy;
};

/// Cotangents for the value/derivative channels of a batch. Empty channels
/// are treated as zero.
template <typename Scalar>
struct ChannelCotangents {
  Vector<Scalar> u, ux, uy, ut, uxx, uyy;
};

namespace detail {

/// Layer state for the derivative-carrying passes. For l >= 1, `a` is the
/// post-activation value and zx..zyy are the pre-activation tangents of
/// layer l. Slot 0 holds the inputs with one-hot tangents (identity
/// activation on the input coordinates).
template <typename Scalar>
struct TangentLayer {
  Matrix<Scalar> a;
  Matrix<Scalar> zx, zy, zt, zxx, zyy;
};

/// Post-activation tangent channels of slot l, derived from the stored
/// state. tanh mixes value and tangents through its first two derivatives.
template <typename Scalar>
void post_channels(const std::vector<TangentLayer<Scalar>>& layers, int l, int num_layers,
                   Matrix<Scalar>& ax, Matrix<Scalar>& ay, Matrix<Scalar>& at,
                   Matrix<Scalar>& axx, Matrix<Scalar>& ayy) {
  const auto& s = layers[l];
  if (l == 0 || l == num_layers) {  // identity activation on inputs and output
    ax = s.zx; ay = s.zy; at = s.zt; axx = s.zxx; ayy = s.zyy;
    return;
  }
  const auto s1 = (Scalar(1) - s.a.array().square()).eval();
  const auto s2 = (Scalar(-2) * s.a.array() * s1).eval();
  ax = (s1 * s.zx.array()).matrix();
  ay = (s1 * s.zy.array()).matrix();
  at = (s1 * s.zt.array()).matrix();
  axx = (s2 * s.zx.array().square() + s1 * s.zxx.array()).matrix();
  ayy = (s2 * s.zy.array().square() + s1 * s.zyy.array()).matrix();
}

template <typename Scalar>
void tangent_forward(const Mlp<Scalar>& mlp, const Matrix<Scalar>& pts,
                     std::vector<TangentLayer<Scalar>>& layers) {
  const int L = mlp.num_layers();
  const Eigen::Index len = pts.cols();
  layers.resize(L + 1);

  auto& in = layers[0];
  in.a = pts;
  in.zx = Matrix<Scalar>::Zero(3, len);
  in.zy = Matrix<Scalar>::Zero(3, len);
  in.zt = Matrix<Scalar>::Zero(3, len);
  in.zx.row(0).setOnes();
  in.zy.row(1).setOnes();
  in.zt.row(2).setOnes();
  in.zxx = Matrix<Scalar>::Zero(3, len);
  in.zyy = Matrix<Scalar>::Zero(3, len);

  Matrix<Scalar> ax, ay, at, axx, ayy;
  for (int l = 0; l < L; ++l) {
    const auto& w = mlp.weights[l];
    post_channels(layers, l, L, ax, ay, at, axx, ayy);
    auto& cur = layers[l + 1];
    Matrix<Scalar> z;
    z.noalias() = w * layers[l].a;
    z.colwise() += mlp.biases[l];
    cur.zx.noalias() = w * ax;
    cur.zy.noalias() = w * ay;
    cur.zt.noalias() = w * at;
    cur.zxx.noalias() = w * axx;
    cur.zyy.noalias() = w * ayy;
    cur.a = (l + 1 < L) ? z.array().tanh().matrix() : z;
  }
}

}  // namespace detail

/// Value and input derivatives of the network over a 3 x n batch, by
/// analytic propagation of the coordinate tangents through the layers.
template <typename Scalar>
PointDerivatives<Scalar> forward_with_derivatives(const Mlp<Scalar>& mlp,
                                                  const Matrix<Scalar>& points) {
  if (points.rows() != 3) throw std::invalid_argument("forward_with_derivatives: points must be 3 x n");
  const Eigen::Index n = points.cols();
  PointDerivatives<Scalar> out;
  out.u.resize(n); out.ux.resize(n); out.uy.resize(n);
  out.ut.resize(n); out.uxx.resize(n); out.uyy.resize(n);
  std::vector<detail::TangentLayer<Scalar>> layers;
  for (Eigen::Index begin = 0; begin < n; begin += detail::kMlpBlock) {
    const Eigen::Index len = std::min(detail::kMlpBlock, n - begin);
    const Matrix<Scalar> chunk = points.middleCols(begin, len);
    detail::tangent_forward(mlp, chunk, layers);
    const auto& top = layers.back();  // identity output: tangents are the derivatives
    out.u.segment(begin, len) = top.a.row(0).transpose();
    out.ux.segment(begin, len) = top.zx.row(0).transpose();
    out.uy.segment(begin, len) = top.zy.row(0).transpose();
    out.ut.segment(begin, len) = top.zt.row(0).transpose();
    out.uxx.segment(begin, len) = top.zxx.row(0).transpose();
    out.uyy.segment(begin, len) = top.zyy.row(0).transpose();
  }
  return out;
}

/// Parameter gradient of
///   sum_p [ cu_p u + cx_p u_x + cy_p u_y + ct_p u_t + cxx_p u_xx + cyy_p u_yy ](p),
/// i.e. reverse mode over the derivative-carrying forward pass. Adds into
/// `grads`.
template <typename Scalar>
void backward_params_channels_into(const Mlp<Scalar>& mlp,
                                   const Matrix<Scalar>& points,
                                   const ChannelCotangents<Scalar>& cot,
                                   ParamGrads<Scalar>& grads) {
  if (points.rows() != 3) throw std::invalid_argument("backward_params_channels: points must be 3 x n");
  const Eigen::Index n = points.cols();
  auto check = [&](const Vector<Scalar>& v, const char* name) {
    if (v.size() != 0 && v.size() != n) {
      throw std::invalid_argument(std::string("backward_params_channels: bad length for ") + name);
    }
  };
  check(cot.u, "u"); check(cot.ux, "ux"); check(cot.uy, "uy");
  check(cot.ut, "ut"); check(cot.uxx, "uxx"); check(cot.uyy, "uyy");

  const int L = mlp.num_layers();
  std::vector<detail::TangentLayer<Scalar>> layers;
  Matrix<Scalar> cv, cx, cy, ct, cxx, cyy;          // post-activation cotangents
  Matrix<Scalar> zv, zx, zy, zt, zxx, zyy;          // pre-activation cotangents
  Matrix<Scalar> ax, ay, at, axx, ayy;

  auto seg_or_zero = [&](const Vector<Scalar>& v, Eigen::Index begin, Eigen::Index len) {
    return v.size() == 0 ? Matrix<Scalar>::Zero(1, len).eval()
                         : Matrix<Scalar>(v.segment(begin, len).transpose());
  };

  for (Eigen::Index begin = 0; begin < n; begin += detail::kMlpBlock) {
    const Eigen::Index len = std::min(detail::kMlpBlock, n - begin);
    const Matrix<Scalar> chunk = points.middleCols(begin, len);
    detail::tangent_forward(mlp, chunk, layers);

    cv = seg_or_zero(cot.u, begin, len);
    cx = seg_or_zero(cot.ux, begin, len);
    cy = seg_or_zero(cot.uy, begin, len);
    ct = seg_or_zero(cot.ut, begin, len);
    cxx = seg_or_zero(cot.uxx, begin, len);
    cyy = seg_or_zero(cot.uyy, begin, len);

    for (int l = L - 1; l >= 0; --l) {
      const auto& top = layers[l + 1];
      if (l + 1 == L) {
        zv = cv; zx = cx; zy = cy; zt = ct; zxx = cxx; zyy = cyy;
      } else {
        // tanh pullback: v = tanh(z), s1 = 1 - v^2, s2 = -2 v s1,
        // ds1/dz = -2 v s1, ds2/dz = (6 v^2 - 2) s1.
        const auto v = top.a.array();
        const auto s1 = (Scalar(1) - v.square()).eval();
        const auto s2 = (Scalar(-2) * v * s1).eval();
        const auto ds1 = (Scalar(-2) * v * s1).eval();
        const auto ds2 = ((Scalar(6) * v.square() - Scalar(2)) * s1).eval();
        zx = (cx.array() * s1 + cxx.array() * Scalar(2) * s2 * top.zx.array()).matrix();
        zy = (cy.array() * s1 + cyy.array() * Scalar(2) * s2 * top.zy.array()).matrix();
        zt = (ct.array() * s1).matrix();
        zxx = (cxx.array() * s1).matrix();
        zyy = (cyy.array() * s1).matrix();
        zv = (cv.array() * s1 +
              (cx.array() * top.zx.array() + cy.array() * top.zy.array() +
               ct.array() * top.zt.array() + cxx.array() * top.zxx.array() +
               cyy.array() * top.zyy.array()) *
                  ds1 +
              (cxx.array() * top.zx.array().square() + cyy.array() * top.zy.array().square()) * ds2)
                 .matrix();
      }

      detail::post_channels(layers, l, L, ax, ay, at, axx, ayy);
      grads.weights[l].noalias() += zv * layers[l].a.transpose();
      grads.weights[l].noalias() += zx * ax.transpose();
      grads.weights[l].noalias() += zy * ay.transpose();
      grads.weights[l].noalias() += zt * at.transpose();
      grads.weights[l].noalias() += zxx * axx.transpose();
      grads.weights[l].noalias() += zyy * ayy.transpose();
      grads.biases[l] += zv.rowwise().sum();

      if (l > 0) {
        cv.noalias() = mlp.weights[l].transpose() * zv;
        cx.noalias() = mlp.weights[l].transpose() * zx;
        cy.noalias() = mlp.weights[l].transpose() * zy;
        ct.noalias() = mlp.weights[l].transpose() * zt;
        cxx.noalias() = mlp.weights[l].transpose() * zxx;
        cyy.noalias() = mlp.weights[l].transpose() * zyy;
      }
    }
  }
}

template <typename Scalar>
ParamGrads<Scalar> backward_params_channels(const Mlp<Scalar>& mlp,
                                            const Matrix<Scalar>& points,
                                            const ChannelCotangents<Scalar>& cot) {
  ParamGrads<Scalar> grads(mlp);
  backward_params_channels_into(mlp, points, cot, grads);
  return grads;
}

/// Worst relative deviation of backward_params from a central finite
/// difference of sum_p cot_p u(p), taken per parameter.
template <typename Scalar>
Scalar grad_check(const Mlp<Scalar>& mlp, const Matrix<Scalar>& points,
                  const Vector<Scalar>& cotangents, Scalar step = Scalar(1e-6)) {
  const Vector<Scalar> analytic = flatten_grads(backward_params(mlp, points, cotangents));
  Mlp<Scalar> probe = mlp;
  Vector<Scalar> theta = flatten_params(mlp);
  Scalar worst = 0;
  for (Eigen::Index p = 0; p < theta.size(); ++p) {
    const Scalar saved = theta[p];
    theta[p] = saved + step;
    unflatten_params(probe, theta);
    const Scalar fp = cotangents.dot(forward(probe, points));
    theta[p] = saved - step;
    unflatten_params(probe, theta);
    const Scalar fm = cotangents.dot(forward(probe, points));
    theta[p] = saved;
    const Scalar fd = (fp - fm) / (2 * step);
    const Scalar denom = std::max({std::abs(fd), std::abs(analytic[p]), Scalar(1e-12)});
    const Scalar err = std::abs(fd - analytic[p]);
    if (err != Scalar(0)) worst = std::max(worst, err / denom);
  }
  unflatten_params(probe, theta);
  return worst;
}

}  // namespace crvpinn
