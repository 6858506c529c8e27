#pragma once

#include "acd/checkpoint.hpp"
#include "acd/gcn.hpp"
#include "acd/heads.hpp"
#include "acd/posenc.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace acd {

enum class FeatureKind { posenc, random };

FeatureKind parse_feature_kind(const std::string& s);
std::string to_string(FeatureKind f);

struct ModelConfig {
  HeadKind head = HeadKind::ccp_attn;
  GcnVariant encoder = GcnVariant::gatedgcn;
  FeatureKind features = FeatureKind::posenc;
  std::size_t input_dim = 20;
  std::size_t gcn_layers = 4;
  std::size_t hidden = 128;
  std::size_t latent_dim = 128;
  std::size_t heads = 4;
  std::size_t inducing = 32;
  std::size_t n_importance = 16;

  void validate() const;
  GcnConfig gcn() const;
  HeadConfig head_config() const;
  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
  bool operator==(const ModelConfig&) const = default;
};

/// A graph with its encoder inputs computed once: arcs and the eval-mode
/// (sign-fixed) positional encoding or the stored random features.
struct PreparedGraph {
  std::size_t n = 0;
  ArcList arcs;
  std::vector<double> features;  ///< n x input_dim
  Labels labels;
};

/// GCN encoder feeding an amortized clustering head.
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  const ClusteringHead& head() const { return *head_; }
  const GcnEncoder& encoder() const { return encoder_; }

  PreparedGraph prepare(const LabeledGraph& g) const;
  /// Node embeddings. Train mode flips positional-encoding signs with `rng` and uses batch statistics.
  Tensor embed(const PreparedGraph& g, Mode mode, Rng* rng) const;
  /// Differentiable training loss of one labeled graph.
  Tensor loss(const PreparedGraph& g, Rng& rng) const;
  /// S independent posterior samples, each on its own stream split from `rng`.
  std::vector<PosteriorSample> sample(const PreparedGraph& g, std::size_t s, const Rng& rng) const;

  Checkpoint checkpoint() const;
  static std::unique_ptr<Model> from_checkpoint(const Checkpoint& ckpt);

 private:
  ModelConfig config_;
  ParameterStore store_;
  GcnEncoder encoder_;
  std::unique_ptr<ClusteringHead> head_;
};

}  // namespace acd
