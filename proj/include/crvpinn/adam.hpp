#pragma once

#include <cmath>
#include <stdexcept>

#include "crvpinn/grid.hpp"

namespace crvpinn {

/// First/second moment estimates plus the step counter for bias correction.
template <typename Scalar>
struct AdamState {
  Vector<Scalar> m;
  Vector<Scalar> v;
  long step = 0;

  explicit AdamState(Eigen::Index n)
      : m(Vector<Scalar>::Zero(n)), v(Vector<Scalar>::Zero(n)) {}
};

/// One bias-corrected Adam update, in place.
template <typename Scalar>
void adam_step(Vector<Scalar>& params, const Vector<Scalar>& grads, AdamState<Scalar>& state,
               Scalar lr, Scalar beta1, Scalar beta2, Scalar eps) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  state.step += 1;
  state.m = beta1 * state.m + (Scalar(1) - beta1) * grads;
  state.v = beta2 * state.v + (Scalar(1) - beta2) * grads.cwiseAbs2();
  const Scalar bc1 = Scalar(1) - std::pow(beta1, static_cast<Scalar>(state.step));
  const Scalar bc2 = Scalar(1) - std::pow(beta2, static_cast<Scalar>(state.step));
  params.array() -=
      lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + eps);
}

}  // namespace crvpinn
