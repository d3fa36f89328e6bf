#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "crvpinn/mlp.hpp"

using namespace crvpinn;

namespace {

Matrix<double> random_points(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix<double> pts(3, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (int r = 0; r < 3; ++r) pts(r, c) = detail::uniform01(rng);
  return pts;
}

Vector<double> random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vector<double> v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 2.0 * detail::uniform01(rng) - 1.0;
  return v;
}

// Central finite differences of the weighted channel sum
//   S(theta) = sum_p (cu u + cx ux + cy uy + ct ut + cxx uxx + cyy uyy)(p)
// used as the independent oracle for the channel pullback.
Vector<double> fd_channel_grad(Mlp<double> mlp, const Matrix<double>& pts,
                               const ChannelCotangents<double>& cot, double step) {
  auto weighted_sum = [&](const Mlp<double>& m) {
    const PointDerivatives<double> d = forward_with_derivatives(m, pts);
    double s = 0.0;
    if (cot.u.size()) s += cot.u.dot(d.u);
    if (cot.ux.size()) s += cot.ux.dot(d.ux);
    if (cot.uy.size()) s += cot.uy.dot(d.uy);
    if (cot.ut.size()) s += cot.ut.dot(d.ut);
    if (cot.uxx.size()) s += cot.uxx.dot(d.uxx);
    if (cot.uyy.size()) s += cot.uyy.dot(d.uyy);
    return s;
  };
  Vector<double> theta = flatten_params(mlp);
  Vector<double> grad(theta.size());
  for (Eigen::Index p = 0; p < theta.size(); ++p) {
    const double saved = theta[p];
    theta[p] = saved + step;
    unflatten_params(mlp, theta);
    const double fp = weighted_sum(mlp);
    theta[p] = saved - step;
    unflatten_params(mlp, theta);
    const double fm = weighted_sum(mlp);
    theta[p] = saved;
    grad[p] = (fp - fm) / (2.0 * step);
  }
  return grad;
}

double max_rel_diff(const Vector<double>& a, const Vector<double>& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double err = std::abs(a[i] - b[i]);
    if (err > 0.0) worst = std::max(worst, err / std::max({std::abs(a[i]), std::abs(b[i]), 1e-12}));
  }
  return worst;
}

}  // namespace

TEST_SUITE("mlp") {
  TEST_CASE("initialization is deterministic and validated") {
    const auto a = init_mlp({3, 8, 1}, 99);
    const auto b = init_mlp({3, 8, 1}, 99);
    for (int l = 0; l < a.num_layers(); ++l) {
      CHECK((a.weights[l] - b.weights[l]).cwiseAbs().maxCoeff() == 0.0);
      CHECK(a.biases[l].cwiseAbs().maxCoeff() == 0.0);
    }
    const auto c = init_mlp({3, 8, 1}, 100);
    CHECK((a.weights[0] - c.weights[0]).cwiseAbs().maxCoeff() > 0.0);

    // Fan-in scaling bounds the draws.
    CHECK(a.weights[0].cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(3.0));
    CHECK(a.weights[1].cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(8.0));

    CHECK_THROWS_AS(init_mlp({2, 8, 1}, 0), std::invalid_argument);
    CHECK_THROWS_AS(init_mlp({3, 8, 2}, 0), std::invalid_argument);
    CHECK_THROWS_AS(init_mlp({3}, 0), std::invalid_argument);
  }

  TEST_CASE("parameter counts") {
    // Sum over layers of out*in + out.
    auto oracle = [](const std::vector<int>& sizes) {
      std::int64_t n = 0;
      for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
        n += std::int64_t(sizes[l + 1]) * sizes[l] + sizes[l + 1];
      return n;
    };
    const std::vector<int> big = {3, 64, 64, 64, 1};
    CHECK(param_count(big) == oracle(big));
    CHECK(param_count(big) == 8641);
    CHECK(param_count({3, 1}) == 4);
    const auto mlp = init_mlp(big, 0);
    CHECK(flatten_params(mlp).size() == 8641);
  }

  TEST_CASE("affine and degenerate forward values") {
    auto affine = init_mlp({3, 1}, 0);
    affine.weights[0].setZero();
    affine.biases[0][0] = 2.75;
    const Matrix<double> pts = random_points(7, 4);
    const Vector<double> out = forward(affine, pts);
    for (Eigen::Index p = 0; p < out.size(); ++p) CHECK(out[p] == 2.75);

    auto zeroed = init_mlp({3, 16, 1}, 1);
    for (auto& w : zeroed.weights) w.setZero();
    CHECK(forward(zeroed, pts).cwiseAbs().maxCoeff() == 0.0);

    const auto net = init_mlp({3, 8, 1}, 5);
    const Vector<double> once = forward(net, pts);
    const Vector<double> twice = forward(net, pts);
    CHECK((once - twice).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("affine layer gradient is the input coordinates") {
    auto affine = init_mlp({3, 1}, 0);
    Matrix<double> pt(3, 1);
    pt << 0.3, -0.8, 0.5;
    Vector<double> cot(1);
    cot << 1.0;
    const auto grads = backward_params(affine, pt, cot);
    CHECK(grads.weights[0](0, 0) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(grads.weights[0](0, 1) == doctest::Approx(-0.8).epsilon(1e-15));
    CHECK(grads.weights[0](0, 2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(grads.biases[0][0] == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("zero cotangents give zero gradients and zero check error") {
    const auto net = init_mlp({3, 8, 1}, 2);
    const Matrix<double> pts = random_points(6, 8);
    const Vector<double> zero = Vector<double>::Zero(6);
    const auto grads = backward_params(net, pts, zero);
    CHECK(flatten_grads(grads).cwiseAbs().maxCoeff() == 0.0);
    CHECK(grad_check(net, pts, zero) == 0.0);
  }

  TEST_CASE("gradient check against central differences") {
    const auto net = init_mlp({3, 8, 1}, 7);
    const Matrix<double> pts = random_points(10, 12);
    const Vector<double> cot = random_vector(10, 13);
    CHECK(grad_check(net, pts, cot) < 1e-5);

    const auto deeper = init_mlp({3, 6, 6, 1}, 8);
    CHECK(grad_check(deeper, pts, cot) < 1e-5);
  }

  TEST_CASE("check error is permutation invariant") {
    const auto net = init_mlp({3, 8, 1}, 7);
    const Matrix<double> pts = random_points(10, 12);
    const Vector<double> cot = random_vector(10, 13);
    std::vector<int> perm(10);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(3);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix<double> pts_perm(3, 10);
    Vector<double> cot_perm(10);
    for (int p = 0; p < 10; ++p) {
      pts_perm.col(p) = pts.col(perm[p]);
      cot_perm[p] = cot[perm[p]];
    }
    CHECK(grad_check(net, pts, cot) ==
          doctest::Approx(grad_check(net, pts_perm, cot_perm)).epsilon(1e-6));
  }

  TEST_CASE("backward is linear in the cotangents") {
    const auto net = init_mlp({3, 10, 1}, 21);
    const Matrix<double> pts = random_points(15, 22);
    const Vector<double> c1 = random_vector(15, 23);
    const Vector<double> c2 = random_vector(15, 24);
    const Vector<double> g1 = flatten_grads(backward_params(net, pts, c1));
    const Vector<double> g2 = flatten_grads(backward_params(net, pts, c2));
    const Vector<double> g12 = flatten_grads(backward_params(net, pts, Vector<double>(c1 + c2)));
    CHECK(max_rel_diff(g12, Vector<double>(g1 + g2)) < 1e-12);
  }

  TEST_CASE("input derivatives match finite differences of the value") {
    const auto net = init_mlp({3, 8, 8, 1}, 31);
    const Matrix<double> pts = random_points(5, 32);
    const PointDerivatives<double> d = forward_with_derivatives(net, pts);
    CHECK((d.u - forward(net, pts)).cwiseAbs().maxCoeff() == 0.0);

    const double h = 1e-5;
    for (Eigen::Index p = 0; p < pts.cols(); ++p) {
      for (int axis = 0; axis < 3; ++axis) {
        Matrix<double> plus = pts.col(p), minus = pts.col(p);
        plus(axis, 0) += h;
        minus(axis, 0) -= h;
        const double fp = forward(net, plus)[0];
        const double fm = forward(net, minus)[0];
        const double f0 = forward(net, Matrix<double>(pts.col(p)))[0];
        const double first = (fp - fm) / (2.0 * h);
        const double second = (fp - 2.0 * f0 + fm) / (h * h);
        const double first_analytic = axis == 0 ? d.ux[p] : axis == 1 ? d.uy[p] : d.ut[p];
        CHECK(first == doctest::Approx(first_analytic).epsilon(1e-7));
        if (axis == 0) CHECK(second == doctest::Approx(d.uxx[p]).epsilon(1e-4));
        if (axis == 1) CHECK(second == doctest::Approx(d.uyy[p]).epsilon(1e-4));
      }
    }
  }

  TEST_CASE("channel pullback matches finite differences") {
    const auto net = init_mlp({3, 8, 1}, 41);
    const Matrix<double> pts = random_points(6, 42);
    ChannelCotangents<double> cot;
    cot.u = random_vector(6, 43);
    cot.ux = random_vector(6, 44);
    cot.uy = random_vector(6, 45);
    cot.ut = random_vector(6, 46);
    cot.uxx = random_vector(6, 47);
    cot.uyy = random_vector(6, 48);
    const Vector<double> analytic = flatten_grads(backward_params_channels(net, pts, cot));
    const Vector<double> fd = fd_channel_grad(net, pts, cot, 1e-6);
    CHECK(max_rel_diff(analytic, fd) < 1e-5);

    const auto deeper = init_mlp({3, 6, 6, 1}, 51);
    const Vector<double> analytic2 = flatten_grads(backward_params_channels(deeper, pts, cot));
    const Vector<double> fd2 = fd_channel_grad(deeper, pts, cot, 1e-6);
    CHECK(max_rel_diff(analytic2, fd2) < 1e-5);
  }

  TEST_CASE("value-only channel pullback equals plain backward") {
    const auto net = init_mlp({3, 8, 8, 1}, 61);
    const Matrix<double> pts = random_points(9, 62);
    ChannelCotangents<double> cot;
    cot.u = random_vector(9, 63);
    const Vector<double> via_channels = flatten_grads(backward_params_channels(net, pts, cot));
    const Vector<double> direct = flatten_grads(backward_params(net, pts, cot.u));
    CHECK(max_rel_diff(via_channels, direct) < 1e-13);
  }

  TEST_CASE("flatten and unflatten round trip") {
    auto net = init_mlp({3, 5, 1}, 71);
    const Vector<double> theta = flatten_params(net);
    auto other = init_mlp({3, 5, 1}, 72);
    unflatten_params(other, theta);
    CHECK((flatten_params(other) - theta).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(unflatten_params(other, Vector<double>(Vector<double>::Zero(3))),
                    std::invalid_argument);
  }
}
