#pragma once

#include "acd/attention.hpp"
#include "acd/graph.hpp"
#include "acd/nn.hpp"

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace acd {

enum class HeadKind { ncp, ncp_attn, ccp, ccp_attn, dac };

HeadKind parse_head_kind(const std::string& s);
std::string to_string(HeadKind k);
bool is_clusterwise(HeadKind k);

struct HeadConfig {
  HeadKind kind = HeadKind::ccp_attn;
  std::size_t input_dim = 128;  ///< width of the node embeddings
  std::size_t hidden = 128;
  std::size_t latent_dim = 128;
  AttnConfig attn;
  std::size_t n_importance = 16;

  void validate() const;
};

/// One complete assignment drawn from a head.
struct PosteriorSample {
  Labels labels;
  double score = 0.0;
  /// Sequential network steps (NCP) or clusterwise rounds (CCP, DAC).
  std::size_t calls = 0;
};

class ClusteringHead {
 public:
  virtual ~ClusteringHead() = default;
  /// Differentiable training loss for one graph (ncp nll, negative elbo, or bce).
  virtual Tensor loss(const Tensor& x, const Labels& labels, Rng& rng) const = 0;
  virtual PosteriorSample sample(const Tensor& x, Rng& rng) const = 0;
  /// Model log-probability of a complete labeling (exact for NCP at a random order, surrogate otherwise).
  virtual double score(const Tensor& x, const Labels& labels, Rng& rng) const = 0;
};

std::unique_ptr<ClusteringHead> make_head(ParameterStore& store, const std::string& name, const HeadConfig& config,
                                          Rng& rng);

/// MLP over [context, point] where the context row is shared by every point.
/// The first layer is split so the point half can be computed once and reused.
class SplitInputMlp {
 public:
  SplitInputMlp() = default;
  SplitInputMlp(ParameterStore& store, const std::string& name, std::size_t depth, std::size_t ctx_dim,
                std::size_t point_dim, std::size_t hidden, std::size_t out, Rng& rng);
  Tensor point_part(const Tensor& points) const { return point0_.forward(points); }
  /// ctx: 1 x ctx_dim, point_pre: m x hidden from point_part.
  Tensor forward(const Tensor& ctx, const Tensor& point_pre) const;

 private:
  Linear ctx0_, point0_;
  Tensor slope0_;
  Mlp rest_;
};

// ---------------------------------------------------------------- NCP

class NcpHead : public ClusteringHead {
 public:
  NcpHead(ParameterStore& store, const std::string& name, const HeadConfig& config, Rng& rng);

  Tensor loss(const Tensor& x, const Labels& labels, Rng& rng) const override;
  PosteriorSample sample(const Tensor& x, Rng& rng) const override;
  double score(const Tensor& x, const Labels& labels, Rng& rng) const override;

  /// log p(c_1:N | x) visiting the rows of x in order; labels canonical in that order.
  Tensor sequential_log_prob(const Tensor& x, std::span<const int> labels) const;
  /// Distribution over the K+1 options for point n given the labels of points 0..n-1.
  std::vector<double> step_distribution(const Tensor& x, std::span<const int> prefix) const;

 private:
  struct Walk {
    Tensor log_prob;
    Labels labels;
    std::vector<double> probs;
    std::size_t calls = 0;
  };
  std::pair<Tensor, Tensor> codes(const Tensor& x) const;
  Walk walk(const Tensor& hx, const Tensor& ux, std::span<const int> fixed, Rng* rng, bool stop_after_fixed) const;

  HeadConfig config_;
  Mlp h_, u_, g_, f_;
  Isab isab_h_, isab_u_;
};

// ---------------------------------------------------------------- CCP / DAC

/// Encodings of one clusterwise round: anchor code D, available-set code U,
/// per-point inputs of the membership network, and the per-point codes that
/// posterior-side aggregations pool over.
struct RoundCodes {
  Tensor d, u, points, ua;
};

/// Shared anchor/available-set encoder of the clusterwise heads.
class AnchorEncoder {
 public:
  AnchorEncoder() = default;
  AnchorEncoder(ParameterStore& store, const std::string& name, const HeadConfig& config, bool attention, Rng& rng);

  Tensor point_codes(const Tensor& x) const { return u_.forward(x); }
  RoundCodes encode(const Tensor& x, const Tensor& ux, std::size_t anchor, std::span<const std::size_t> avail) const;
  std::size_t anchor_dim() const { return anchor_dim_; }

 private:
  bool attention_ = false;
  std::size_t anchor_dim_ = 0;
  Mlp u_;
  Isab isab_;
  Mab mab_;
  Pma pma_;
};

class CcpHead : public ClusteringHead {
 public:
  CcpHead(ParameterStore& store, const std::string& name, const HeadConfig& config, Rng& rng);

  Tensor loss(const Tensor& x, const Labels& labels, Rng& rng) const override;
  PosteriorSample sample(const Tensor& x, Rng& rng) const override;
  double score(const Tensor& x, const Labels& labels, Rng& rng) const override;

  /// Negative elbo visiting clusters in a random order with uniform anchors.
  Tensor negative_elbo(const Tensor& x, const Labels& labels, Rng& rng) const { return loss(x, labels, rng); }

  // Single-round views, used for diagnostics and tests.
  std::pair<std::vector<double>, std::vector<double>> prior(const Tensor& x, const ClusterSets& assigned,
                                                            std::size_t anchor,
                                                            std::span<const std::size_t> avail) const;
  std::vector<double> membership_logits(const Tensor& x, const ClusterSets& assigned, std::size_t anchor,
                                        std::span<const std::size_t> avail, std::span<const double> z) const;
  /// Importance estimate of log of the integral of p(b | z) p(z) over z with proposal q(z | b).
  double log_marginal(const Tensor& x, const ClusterSets& assigned, std::size_t anchor,
                      std::span<const std::size_t> avail, std::span<const int> bits, std::size_t n_importance,
                      Rng& rng) const;
  /// The analytic KL(q || p) of one round, for diagnostics.
  double round_kl(const Tensor& x, const ClusterSets& assigned, std::size_t anchor,
                  std::span<const std::size_t> avail, std::span<const int> bits) const;

  const HeadConfig& config() const { return config_; }

 private:
  struct Gaussian {
    Tensor mu, sigma;
  };
  Tensor cluster_code(const Tensor& hx, std::span<const std::size_t> members) const;
  Tensor assigned_code(const Tensor& hx, const ClusterSets& assigned) const;
  Tensor pool(const Pma& attn, const Tensor& rows) const;
  Gaussian gaussian(const Mlp& net, const Tensor& input) const;
  Gaussian prior_of(const RoundCodes& rc, const Tensor& g) const;
  Gaussian posterior_of(const RoundCodes& rc, const Tensor& g, std::span<const int> bits) const;
  Tensor logits(const RoundCodes& rc, const Tensor& g, const Tensor& point_pre, const Tensor& z) const;
  double importance(const RoundCodes& rc, const Tensor& g, std::span<const int> bits, Rng& rng) const;

  HeadConfig config_;
  bool attention_ = false;
  AnchorEncoder enc_;
  Mlp h_, g_;
  Pma pma_h_, pma_in_, pma_out_;
  Mlp prior_, posterior_;
  SplitInputMlp rho_;
};

class DacHead : public ClusteringHead {
 public:
  DacHead(ParameterStore& store, const std::string& name, const HeadConfig& config, Rng& rng);

  Tensor loss(const Tensor& x, const Labels& labels, Rng& rng) const override;
  /// Greedy anchored filtering: points with logit > 0 join (probability exactly 1/2 does not).
  PosteriorSample sample(const Tensor& x, Rng& rng) const override;
  double score(const Tensor& x, const Labels& labels, Rng& rng) const override;

  std::vector<double> membership_logits(const Tensor& x, std::size_t anchor, std::span<const std::size_t> avail) const;

 private:
  Tensor logits(const Tensor& x, const Tensor& ux, std::size_t anchor, std::span<const std::size_t> avail) const;

  HeadConfig config_;
  AnchorEncoder enc_;
  SplitInputMlp rho_;
};

}  // namespace acd
