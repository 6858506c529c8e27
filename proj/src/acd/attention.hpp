#pragma once

#include "acd/nn.hpp"

#include <string>

namespace acd {

struct AttnConfig {
  std::size_t heads = 4;
  std::size_t dim = 128;
  std::size_t inducing = 32;
  std::size_t seeds = 1;

  void validate() const;
};

/// Multi-head scaled dot-product attention with its own projections.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterStore& store, const std::string& name, std::size_t dim_k, std::size_t dim_v,
                     const AttnConfig& config, Rng& rng);

  /// `q_proj` is the already projected query (n x d); k is m x d_k, v is m x d_v.
  Tensor forward_projected(const Tensor& q_proj, const Tensor& k, const Tensor& v) const;

 private:
  std::size_t heads_ = 1, dim_ = 0;
  Linear wk_, wv_, wo_;
};

/// MAB(x, y) = h + FF(h), h = x W_q + MHA(x, y, y). The query projection W_q is
/// shared by the residual path and the attention queries.
class Mab {
 public:
  Mab() = default;
  Mab(ParameterStore& store, const std::string& name, std::size_t dim_x, std::size_t dim_y,
      const AttnConfig& config, Rng& rng);
  Tensor forward(const Tensor& x, const Tensor& y) const;

 private:
  Linear wq_;
  MultiHeadAttention mha_;
  Linear ff1_, ff2_;
};

/// PMA(x) = MAB(e, x) with trainable seeds e.
class Pma {
 public:
  Pma() = default;
  Pma(ParameterStore& store, const std::string& name, std::size_t dim_x, const AttnConfig& config, Rng& rng);
  Tensor forward(const Tensor& x) const;

 private:
  Tensor seeds_;
  Mab mab_;
};

/// ISAB(x) = MAB(x, MAB(s, x)) with trainable inducing points s.
class Isab {
 public:
  Isab() = default;
  Isab(ParameterStore& store, const std::string& name, std::size_t dim_x, const AttnConfig& config, Rng& rng);
  Tensor forward(const Tensor& x) const;

 private:
  Tensor inducing_;
  Mab pool_, out_;
};

}  // namespace acd
