#pragma once

#include "acd/graph.hpp"
#include "acd/nn.hpp"

#include <string>
#include <vector>

namespace acd {

enum class GcnVariant { graphsage, gatedgcn };

GcnVariant parse_gcn_variant(const std::string& s);
std::string to_string(GcnVariant v);

struct GcnConfig {
  GcnVariant variant = GcnVariant::gatedgcn;
  std::size_t layers = 4;
  std::size_t hidden = 128;
  std::size_t input_dim = 20;

  void validate() const;
};

/// Directed arcs j -> i for both directions of every undirected edge, grouped by target.
struct ArcList {
  std::size_t n_nodes = 0;
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
  std::vector<double> inv_in_degree;  ///< per node; 0 for isolated nodes

  static ArcList from_graph(const LabeledGraph& g);
};

/// Node embedding backbone: a shared input lift followed by L message-passing layers.
class GcnEncoder {
 public:
  static constexpr double kGateEps = 1e-6;

  GcnEncoder() = default;
  GcnEncoder(ParameterStore& store, const std::string& name, const GcnConfig& config, Rng& rng);

  const GcnConfig& config() const { return config_; }

  /// N x input_dim -> N x hidden, affine and shared across nodes.
  Tensor embed_input(const Tensor& features) const;
  Tensor graphsage_forward(const ArcList& arcs, const Tensor& h0, Mode mode) const;
  Tensor gatedgcn_forward(const ArcList& arcs, const Tensor& h0, Mode mode) const;

  /// embed_input followed by the configured variant.
  Tensor forward(const ArcList& arcs, const Tensor& features, Mode mode) const;

 private:
  struct SageLayer {
    Linear self, neigh;
    BatchNorm bn;
  };
  struct GatedLayer {
    Linear u, v;
    BatchNorm bn_h;
  };
  struct EdgeLayer {
    Linear a, b, c;
    BatchNorm bn_e;
  };

  GcnConfig config_;
  Linear lift_;
  std::vector<SageLayer> sage_;
  std::vector<GatedLayer> gated_;
  std::vector<EdgeLayer> edge_;
};

}  // namespace acd
