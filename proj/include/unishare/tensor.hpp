#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "unishare/rng.hpp"

namespace unishare {

// Dense row-major tensor of doubles. Rank 1 or 2 is all the model needs.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(count(shape)), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (count(shape) != static_cast<long long>(data.size()))
      throw std::invalid_argument("tensor: shape/data size mismatch");
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape); }
  static Tensor vec(std::vector<double> d) {
    int n = static_cast<int>(d.size());
    return Tensor({n}, std::move(d));
  }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static long long count(const std::vector<int>& s) {
    long long n = 1;
    for (int d : s) {
      if (d < 0) throw std::invalid_argument("tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  long long size() const { return static_cast<long long>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int rows() const { return rank() == 2 ? shape[0] : 1; }
  int cols() const { return rank() == 2 ? shape[1] : (rank() == 1 ? shape[0] : 0); }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }
  double& operator[](size_t i) { return data[i]; }
  double operator[](size_t i) const { return data[i]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool is_scalar() const { return size() == 1; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
  void zero() { fill(0.0); }
};

// Trainable value plus its gradient buffer. `frozen` parameters are skipped
// by the optimizer entirely; `trainable == false` marks fixed inputs that
// never receive an optimizer state.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;
  bool frozen = false;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros_like(value)) {}

  static Parameter uniform_init(std::string n, std::vector<int> shape, double lo, double hi,
                                Rng& rng) {
    Tensor t(shape);
    for (auto& x : t.data) x = rng.uniform(lo, hi);
    return Parameter(std::move(n), std::move(t));
  }

  // Kaiming-style scaled normal for MLP weights: std = sqrt(2 / fan_in).
  static Parameter kaiming_init(std::string n, int fan_in, int fan_out, Rng& rng) {
    Tensor t({fan_in, fan_out});
    double std = std::sqrt(2.0 / fan_in);
    for (auto& x : t.data) x = std * rng.normal();
    return Parameter(std::move(n), std::move(t));
  }

  void zero_grad() { grad.zero(); }
};

struct AdamState {
  Tensor m;
  Tensor v;
  long long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 0.001;

  AdamState() = default;
  AdamState(const Parameter& p, double lr) : m(p.value.shape), v(p.value.shape), learning_rate(lr) {}
};

// One Adam update with bias correction; clears the gradient afterward.
// Frozen (or non-trainable) parameters are left bit-identical, grad included.
inline void adam_step(Parameter& p, AdamState& s) {
  if (p.frozen || !p.trainable) return;
  if (!p.grad.same_shape(p.value)) throw std::invalid_argument("adam_step: grad shape mismatch");
  s.step_count += 1;
  double b1t = 1.0 - std::pow(s.beta1, static_cast<double>(s.step_count));
  double b2t = 1.0 - std::pow(s.beta2, static_cast<double>(s.step_count));
  for (size_t i = 0; i < p.value.data.size(); ++i) {
    double g = p.grad.data[i];
    s.m.data[i] = s.beta1 * s.m.data[i] + (1.0 - s.beta1) * g;
    s.v.data[i] = s.beta2 * s.v.data[i] + (1.0 - s.beta2) * g * g;
    double mhat = s.m.data[i] / b1t;
    double vhat = s.v.data[i] / b2t;
    p.value.data[i] -= s.learning_rate * mhat / (std::sqrt(vhat) + s.epsilon);
  }
  p.zero_grad();
}

}  // namespace unishare
