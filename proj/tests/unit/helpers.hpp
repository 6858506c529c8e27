#pragma once

#include "acd/nn.hpp"
#include "acd/tensor.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace acd::testing {

inline Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double sd = 1.0, bool grad = true) {
  std::vector<double> v(r * c);
  for (auto& x : v) x = rng.normal(0.0, sd);
  return Tensor::from(r, c, std::move(v), grad);
}

/// Max relative error between the analytic gradient of f w.r.t. every input and
/// central differences with step h; the denominator is floored to avoid dividing by ~0.
inline double gradient_check(const std::function<Tensor()>& f, std::vector<Tensor> inputs, double h = 1e-5,
                             double floor = 1e-6) {
  for (auto& t : inputs) t.zero_grad();
  backward(f());
  std::vector<std::vector<double>> analytic;
  for (auto& t : inputs) analytic.emplace_back(t.grad().begin(), t.grad().end());
  double worst = 0.0;
  NoGradGuard ng;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto v = inputs[k].mutable_data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double keep = v[i];
      v[i] = keep + h;
      const double up = f().item();
      v[i] = keep - h;
      const double down = f().item();
      v[i] = keep;
      const double num = (up - down) / (2 * h);
      const double a = analytic[k][i];
      const double rel = std::abs(num - a) / std::max({std::abs(num), std::abs(a), floor});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

inline Tensor param(ParameterStore& store, const std::string& name) {
  for (auto const& p : store.all())
    if (p.name == name) return p.tensor;
  FAIL("no parameter " << name);
  return {};
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace acd::testing
