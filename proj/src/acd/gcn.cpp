#include "acd/gcn.hpp"

#include <stdexcept>

namespace acd {

GcnVariant parse_gcn_variant(const std::string& s) {
  if (s == "graphsage") return GcnVariant::graphsage;
  if (s == "gatedgcn") return GcnVariant::gatedgcn;
  throw std::invalid_argument("unknown encoder '" + s + "' (expected graphsage or gatedgcn)");
}

std::string to_string(GcnVariant v) { return v == GcnVariant::graphsage ? "graphsage" : "gatedgcn"; }

void GcnConfig::validate() const {
  if (layers < 1) throw std::invalid_argument("gcn: layers must be >= 1");
  if (hidden < 1 || input_dim < 1) throw std::invalid_argument("gcn: dimensions must be positive");
}

ArcList ArcList::from_graph(const LabeledGraph& g) {
  ArcList arcs;
  arcs.n_nodes = g.n_nodes();
  arcs.inv_in_degree.assign(g.n_nodes(), 0.0);
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    for (auto j : g.neighbors(i)) {
      arcs.src.push_back(j);
      arcs.dst.push_back(i);
    }
    if (g.degree(i) > 0) arcs.inv_in_degree[i] = 1.0 / static_cast<double>(g.degree(i));
  }
  return arcs;
}

GcnEncoder::GcnEncoder(ParameterStore& store, const std::string& name, const GcnConfig& config, Rng& rng)
    : config_(config) {
  config.validate();
  const std::size_t d = config.hidden;
  lift_ = Linear(store, name + ".lift", config.input_dim, d, rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = name + ".layer" + std::to_string(l);
    if (config.variant == GcnVariant::graphsage) {
      sage_.push_back({Linear(store, p + ".U", d, d, rng), Linear(store, p + ".V", d, d, rng, false),
                       BatchNorm(store, p + ".bn", d)});
    } else {
      gated_.push_back({Linear(store, p + ".U", d, d, rng), Linear(store, p + ".V", d, d, rng, false),
                        BatchNorm(store, p + ".bn_h", d)});
      // The edge state feeding layer l+1 is produced here; the last layer needs none.
      if (l + 1 < config.layers)
        edge_.push_back({Linear(store, p + ".A", d, d, rng), Linear(store, p + ".B", d, d, rng, false),
                         Linear(store, p + ".C", d, d, rng, false), BatchNorm(store, p + ".bn_e", d)});
    }
  }
}

Tensor GcnEncoder::embed_input(const Tensor& features) const {
  if (features.cols() != config_.input_dim)
    throw dimension_error("embed_input: feature width " + std::to_string(features.cols()) + " != " +
                          std::to_string(config_.input_dim));
  return lift_.forward(features);
}

Tensor GcnEncoder::graphsage_forward(const ArcList& arcs, const Tensor& h0, Mode mode) const {
  if (sage_.empty()) throw std::logic_error("graphsage_forward on a gatedgcn encoder");
  Tensor h = h0;
  for (auto const& layer : sage_) {
    Tensor vh = layer.neigh.forward(h);
    Tensor agg = scale_rows(scatter_add_rows(gather_rows(vh, arcs.src), arcs.dst, arcs.n_nodes), arcs.inv_in_degree);
    h = relu(layer.bn.forward(add(layer.self.forward(h), agg), mode));
  }
  return h;
}

Tensor GcnEncoder::gatedgcn_forward(const ArcList& arcs, const Tensor& h0, Mode mode) const {
  if (gated_.empty()) throw std::logic_error("gatedgcn_forward on a graphsage encoder");
  const std::size_t n_arcs = arcs.src.size();
  Tensor h = h0;
  Tensor e_hat = Tensor::full(n_arcs, config_.hidden, 1.0);
  for (std::size_t l = 0; l < gated_.size(); ++l) {
    auto const& layer = gated_[l];
    // Gates normalized over the incoming arcs of each target node, per channel.
    Tensor sig = sigmoid(e_hat);
    Tensor denom = gather_rows(scatter_add_rows(sig, arcs.dst, arcs.n_nodes), arcs.dst);
    Tensor gate = mul(sig, reciprocal(add_scalar(denom, kGateEps)));
    Tensor msg = mul(gate, gather_rows(layer.v.forward(h), arcs.src));
    Tensor agg = scatter_add_rows(msg, arcs.dst, arcs.n_nodes);
    Tensor h_next = add(h, relu(layer.bn_h.forward(add(layer.u.forward(h), agg), mode)));
    if (l < edge_.size()) {
      auto const& el = edge_[l];
      Tensor pre = add(add(gather_rows(el.a.forward(h), arcs.dst), gather_rows(el.b.forward(h), arcs.src)),
                       el.c.forward(e_hat));
      e_hat = add(e_hat, relu(el.bn_e.forward(pre, mode)));
    }
    h = h_next;
  }
  return h;
}

Tensor GcnEncoder::forward(const ArcList& arcs, const Tensor& features, Mode mode) const {
  Tensor h0 = embed_input(features);
  return config_.variant == GcnVariant::graphsage ? graphsage_forward(arcs, h0, mode) : gatedgcn_forward(arcs, h0, mode);
}

}  // namespace acd
