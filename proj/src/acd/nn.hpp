#pragma once

#include "acd/rng.hpp"
#include "acd/tensor.hpp"

#include <string>
#include <utility>
#include <vector>

namespace acd {

enum class Mode { train, eval };

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Owns the named learnable parameters and non-learnable buffers of a model.
/// Modules keep Tensor handles into the store, so loading a checkpoint into
/// the store updates every module in place.
class ParameterStore {
 public:
  Tensor add_parameter(std::string name, Tensor t);
  Tensor add_buffer(std::string name, Tensor t);

  std::vector<NamedTensor>& parameters() { return params_; }
  const std::vector<NamedTensor>& parameters() const { return params_; }
  const std::vector<NamedTensor>& buffers() const { return buffers_; }

  /// Parameters followed by buffers, in registration order.
  std::vector<NamedTensor> all() const;
  std::size_t parameter_count() const;

  void zero_grad();

 private:
  void check_unique(const std::string& name) const;
  std::vector<NamedTensor> params_;
  std::vector<NamedTensor> buffers_;
};

/// Glorot-uniform initialized affine map x W + b.
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
         bool bias = true);
  Tensor forward(const Tensor& x) const;
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  const Tensor& weight() const { return w_; }
  const Tensor& bias() const { return b_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  Tensor w_, b_;
};

/// `depth` linear layers with a learned-slope PReLU between consecutive layers.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore& store, const std::string& name, std::size_t depth, std::size_t in,
      std::size_t hidden, std::size_t out, Rng& rng);
  Tensor forward(const Tensor& x) const;
  std::size_t in_features() const { return layers_.front().in_features(); }
  std::size_t out_features() const { return layers_.back().out_features(); }

 private:
  std::vector<Linear> layers_;
  std::vector<Tensor> slopes_;
};

/// Per-channel normalization over rows with learned scale and shift.
/// Running statistics use momentum 0.1 and the unbiased batch variance.
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(ParameterStore& store, const std::string& name, std::size_t channels);
  Tensor forward(const Tensor& x, Mode mode) const;

  static constexpr double kMomentum = 0.1;
  static constexpr double kEps = 1e-5;

 private:
  Tensor gamma_, beta_;
  mutable Tensor running_mean_, running_var_;
};

}  // namespace acd
