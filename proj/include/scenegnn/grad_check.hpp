#pragma once

// Central-difference gradient checking.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "scenegnn/tensor.hpp"

namespace scenegnn::nn {

/// Compares backward() against central differences of `f` with respect to
/// every element of `inputs`, which `f` must read. Returns
/// max_i |g_i - n_i| / max(1, |g_i|, |n_i|).
inline double grad_check(const std::function<Tensor()>& f, std::vector<Tensor> inputs, double h = 1e-6) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  f().backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& t : inputs) analytic.emplace_back(t.grad().begin(), t.grad().end());

  NoGradGuard no_grad;
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto values = inputs[k].mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + h;
      const double up = f().item();
      values[i] = orig - h;
      const double down = f().item();
      values[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double g = analytic[k][i];
      const double err = std::abs(g - numeric) / std::max({1.0, std::abs(g), std::abs(numeric)});
      worst = std::max(worst, err);
    }
  }
  for (auto& t : inputs) t.zero_grad();
  return worst;
}

inline double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double h = 1e-6) {
  return grad_check([&f, x] { return f(x); }, std::vector<Tensor>{x}, h);
}

}  // namespace scenegnn::nn
