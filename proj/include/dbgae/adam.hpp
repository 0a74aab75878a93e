#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dbgae/autodiff.hpp"

namespace dbgae {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Matrix> m, v;
};

// One bias-corrected Adam update. Moments are created lazily on the first call.
inline void adam_step(std::span<Matrix> params, std::span<const Matrix> grads, AdamState& state) {
  if (params.size() != grads.size()) throw DimensionError("adam_step: parameter and gradient counts differ");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Matrix::Zero(p.rows(), p.cols()));
      state.v.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }
  if (state.m.size() != params.size()) throw DimensionError("adam_step: optimizer state does not match parameters");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].rows() != params[k].rows() || grads[k].cols() != params[k].cols())
      throw DimensionError("adam_step: gradient " + std::to_string(k) + " shape mismatch");
    if (!grads[k].allFinite()) {
      Eigen::Index r = 0, c = 0;
      for (Eigen::Index i = 0; i < grads[k].size(); ++i)
        if (!std::isfinite(grads[k].data()[i])) {
          r = i / grads[k].cols();
          c = i % grads[k].cols();
          break;
        }
      throw TrainingError("non-finite gradient in parameter " + std::to_string(k) + " at (" + std::to_string(r) + "," +
                          std::to_string(c) + ") on step " + std::to_string(state.step + 1));
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * grads[k];
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * grads[k].cwiseProduct(grads[k]);
    params[k].array() -= state.lr * (state.m[k].array() / c1) / ((state.v[k].array() / c2).sqrt() + state.eps);
  }
}

}  // namespace dbgae
