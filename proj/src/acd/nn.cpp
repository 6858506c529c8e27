#include "acd/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace acd {

void ParameterStore::check_unique(const std::string& name) const {
  for (auto const* list : {&params_, &buffers_})
    for (auto const& p : *list)
      if (p.name == name) throw std::logic_error("duplicate parameter name: " + name);
}

Tensor ParameterStore::add_parameter(std::string name, Tensor t) {
  check_unique(name);
  t.set_requires_grad(true);
  params_.push_back({std::move(name), t});
  return t;
}

Tensor ParameterStore::add_buffer(std::string name, Tensor t) {
  check_unique(name);
  t.set_requires_grad(false);
  buffers_.push_back({std::move(name), t});
  return t;
}

std::vector<NamedTensor> ParameterStore::all() const {
  std::vector<NamedTensor> out = params_;
  out.insert(out.end(), buffers_.begin(), buffers_.end());
  return out;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (auto const& p : params_) n += p.tensor.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

Linear::Linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
               bool bias)
    : in_(in), out_(out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> w(in * out);
  for (auto& v : w) v = rng.uniform(-limit, limit);
  w_ = store.add_parameter(name + ".weight", Tensor::from(in, out, std::move(w)));
  if (bias) b_ = store.add_parameter(name + ".bias", Tensor::zeros(1, out));
}

Tensor Linear::forward(const Tensor& x) const {
  if (x.cols() != in_)
    throw dimension_error("linear: input width " + std::to_string(x.cols()) + " != " + std::to_string(in_));
  Tensor y = matmul(x, w_);
  return b_.defined() ? add(y, b_) : y;
}

Mlp::Mlp(ParameterStore& store, const std::string& name, std::size_t depth, std::size_t in,
         std::size_t hidden, std::size_t out, Rng& rng) {
  if (depth == 0) throw std::invalid_argument("mlp: depth must be positive");
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t a = l == 0 ? in : hidden;
    const std::size_t b = l + 1 == depth ? out : hidden;
    layers_.emplace_back(store, name + "." + std::to_string(l), a, b, rng);
    if (l + 1 < depth)
      slopes_.push_back(store.add_parameter(name + ".prelu" + std::to_string(l), Tensor::scalar(0.25)));
  }
}

Tensor Mlp::forward(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = layers_[l].forward(h);
    if (l < slopes_.size()) h = prelu(h, slopes_[l]);
  }
  return h;
}

BatchNorm::BatchNorm(ParameterStore& store, const std::string& name, std::size_t channels) {
  gamma_ = store.add_parameter(name + ".gamma", Tensor::full(1, channels, 1.0));
  beta_ = store.add_parameter(name + ".beta", Tensor::zeros(1, channels));
  running_mean_ = store.add_buffer(name + ".running_mean", Tensor::zeros(1, channels));
  running_var_ = store.add_buffer(name + ".running_var", Tensor::full(1, channels, 1.0));
}

Tensor BatchNorm::forward(const Tensor& x, Mode mode) const {
  if (x.rows() == 0) return x;
  Tensor xhat;
  if (mode == Mode::train) {
    BatchStats stats;
    xhat = batch_normalize(x, kEps, &stats);
    const double r = static_cast<double>(x.rows());
    auto rm = running_mean_.mutable_data();
    auto rv = running_var_.mutable_data();
    for (std::size_t j = 0; j < rm.size(); ++j) {
      rm[j] = (1.0 - kMomentum) * rm[j] + kMomentum * stats.mean[j];
      if (x.rows() > 1) rv[j] = (1.0 - kMomentum) * rv[j] + kMomentum * stats.var[j] * r / (r - 1.0);
    }
  } else {
    xhat = fixed_normalize(x, running_mean_.data(), running_var_.data(), kEps);
  }
  return add(mul(xhat, gamma_), beta_);
}

}  // namespace acd
