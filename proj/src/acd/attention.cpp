#include "acd/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace acd {

void AttnConfig::validate() const {
  if (heads == 0 || dim == 0 || dim % heads != 0)
    throw std::invalid_argument("attention: dim " + std::to_string(dim) + " not divisible by heads " +
                                std::to_string(heads));
  if (inducing == 0 || seeds == 0) throw std::invalid_argument("attention: inducing and seed counts must be >= 1");
}

namespace {

Tensor init_points(ParameterStore& store, const std::string& name, std::size_t m, std::size_t d, Rng& rng) {
  std::vector<double> v(m * d);
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  for (auto& x : v) x = rng.normal(0.0, sd);
  return store.add_parameter(name, Tensor::from(m, d, std::move(v)));
}

}  // namespace

MultiHeadAttention::MultiHeadAttention(ParameterStore& store, const std::string& name, std::size_t dim_k,
                                       std::size_t dim_v, const AttnConfig& config, Rng& rng)
    : heads_(config.heads), dim_(config.dim) {
  config.validate();
  wk_ = Linear(store, name + ".k", dim_k, dim_, rng);
  wv_ = Linear(store, name + ".v", dim_v, dim_, rng);
  wo_ = Linear(store, name + ".o", dim_, dim_, rng);
}

Tensor MultiHeadAttention::forward_projected(const Tensor& q_proj, const Tensor& k, const Tensor& v) const {
  if (k.rows() == 0) throw dimension_error("mha: attention over zero keys");
  if (k.rows() != v.rows())
    throw dimension_error("mha: key count " + std::to_string(k.rows()) + " != value count " +
                          std::to_string(v.rows()));
  if (q_proj.cols() != dim_) throw dimension_error("mha: query width mismatch");
  Tensor kp = wk_.forward(k);
  Tensor vp = wv_.forward(v);
  const std::size_t dh = dim_ / heads_;
  const double s = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> outs;
  outs.reserve(heads_);
  for (std::size_t h = 0; h < heads_; ++h) {
    Tensor qh = slice_cols(q_proj, h * dh, (h + 1) * dh);
    Tensor kh = slice_cols(kp, h * dh, (h + 1) * dh);
    Tensor vh = slice_cols(vp, h * dh, (h + 1) * dh);
    Tensor w = softmax_rows(scale(matmul(qh, transpose(kh)), s));
    outs.push_back(matmul(w, vh));
  }
  return wo_.forward(heads_ == 1 ? outs.front() : concat_cols(outs));
}

Mab::Mab(ParameterStore& store, const std::string& name, std::size_t dim_x, std::size_t dim_y,
         const AttnConfig& config, Rng& rng) {
  wq_ = Linear(store, name + ".q", dim_x, config.dim, rng);
  mha_ = MultiHeadAttention(store, name + ".mha", dim_y, dim_y, config, rng);
  ff1_ = Linear(store, name + ".ff0", config.dim, config.dim, rng);
  ff2_ = Linear(store, name + ".ff1", config.dim, config.dim, rng);
}

Tensor Mab::forward(const Tensor& x, const Tensor& y) const {
  Tensor q = wq_.forward(x);
  Tensor h = add(q, mha_.forward_projected(q, y, y));
  return add(h, ff2_.forward(relu(ff1_.forward(h))));
}

Pma::Pma(ParameterStore& store, const std::string& name, std::size_t dim_x, const AttnConfig& config, Rng& rng) {
  seeds_ = init_points(store, name + ".seeds", config.seeds, config.dim, rng);
  mab_ = Mab(store, name + ".mab", config.dim, dim_x, config, rng);
}

Tensor Pma::forward(const Tensor& x) const {
  if (x.rows() == 0) throw dimension_error("pma: empty set");
  return mab_.forward(seeds_, x);
}

Isab::Isab(ParameterStore& store, const std::string& name, std::size_t dim_x, const AttnConfig& config, Rng& rng) {
  inducing_ = init_points(store, name + ".inducing", config.inducing, config.dim, rng);
  pool_ = Mab(store, name + ".mab0", config.dim, dim_x, config, rng);
  out_ = Mab(store, name + ".mab1", dim_x, config.dim, config, rng);
}

Tensor Isab::forward(const Tensor& x) const {
  if (x.rows() == 0) throw dimension_error("isab: empty set");
  return out_.forward(x, pool_.forward(inducing_, x));
}

}  // namespace acd
