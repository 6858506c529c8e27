#include "acd/model.hpp"

#include <json.hpp>

#include <stdexcept>

namespace acd {

FeatureKind parse_feature_kind(const std::string& s) {
  if (s == "posenc") return FeatureKind::posenc;
  if (s == "random") return FeatureKind::random;
  throw std::invalid_argument("unknown features '" + s + "' (expected posenc or random)");
}

std::string to_string(FeatureKind f) { return f == FeatureKind::posenc ? "posenc" : "random"; }

void ModelConfig::validate() const {
  gcn().validate();
  head_config().validate();
}

GcnConfig ModelConfig::gcn() const {
  GcnConfig c;
  c.variant = encoder;
  c.layers = gcn_layers;
  c.hidden = hidden;
  c.input_dim = input_dim;
  return c;
}

HeadConfig ModelConfig::head_config() const {
  HeadConfig c;
  c.kind = head;
  c.input_dim = hidden;
  c.hidden = hidden;
  c.latent_dim = latent_dim;
  c.attn.heads = heads;
  c.attn.dim = hidden;
  c.attn.inducing = inducing;
  c.n_importance = n_importance;
  return c;
}

std::string ModelConfig::to_json() const {
  nlohmann::json j = {{"model", to_string(head)},       {"encoder", to_string(encoder)},
                      {"features", to_string(features)}, {"input_dim", input_dim},
                      {"gcn_layers", gcn_layers},       {"hidden", hidden},
                      {"latent_dim", latent_dim},       {"heads", heads},
                      {"inducing", inducing},           {"n_importance", n_importance}};
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  ModelConfig c;
  c.head = parse_head_kind(j.at("model").get<std::string>());
  c.encoder = parse_gcn_variant(j.at("encoder").get<std::string>());
  c.features = parse_feature_kind(j.at("features").get<std::string>());
  c.input_dim = j.at("input_dim");
  c.gcn_layers = j.at("gcn_layers");
  c.hidden = j.at("hidden");
  c.latent_dim = j.at("latent_dim");
  c.heads = j.at("heads");
  c.inducing = j.at("inducing");
  c.n_importance = j.at("n_importance");
  return c;
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config.validate();
  Rng rng(seed, 0x6d6f64656cULL);
  encoder_ = GcnEncoder(store_, "gcn", config.gcn(), rng);
  head_ = make_head(store_, "head", config.head_config(), rng);
}

namespace {

// Deterministic per-graph stream for graphs that carry no stored random features.
std::uint64_t structure_hash(const LabeledGraph& g) {
  std::uint64_t h = mix64(g.n_nodes());
  for (auto [i, j] : g.edges()) h = mix64(h ^ (static_cast<std::uint64_t>(i) << 32 | j));
  return h;
}

}  // namespace

PreparedGraph Model::prepare(const LabeledGraph& g) const {
  PreparedGraph p;
  p.n = g.n_nodes();
  p.arcs = ArcList::from_graph(g);
  p.labels = g.labels();
  if (config_.features == FeatureKind::posenc) {
    p.features = laplacian_pos_enc(g, PosEncConfig{config_.input_dim}, nullptr, Mode::eval);
  } else if (g.has_features() && g.feature_dim() == config_.input_dim) {
    p.features = g.features();
  } else {
    Rng rng(structure_hash(g), 0x66656174ULL);
    p.features = random_features(p.n, config_.input_dim, rng);
  }
  return p;
}

Tensor Model::embed(const PreparedGraph& g, Mode mode, Rng* rng) const {
  std::vector<double> f = g.features;
  if (mode == Mode::train && config_.features == FeatureKind::posenc && rng)
    random_sign_flip(f, g.n, config_.input_dim, *rng);
  return encoder_.forward(g.arcs, Tensor::from(g.n, config_.input_dim, std::move(f)), mode);
}

Tensor Model::loss(const PreparedGraph& g, Rng& rng) const {
  if (g.labels.size() != g.n) throw std::invalid_argument("training graph has no labels");
  Tensor x = embed(g, Mode::train, &rng);
  return head_->loss(x, g.labels, rng);
}

std::vector<PosteriorSample> Model::sample(const PreparedGraph& g, std::size_t s, const Rng& rng) const {
  NoGradGuard ng;
  Tensor x = embed(g, Mode::eval, nullptr);
  std::vector<PosteriorSample> out;
  out.reserve(s);
  for (std::size_t i = 0; i < s; ++i) {
    Rng r = rng.split(i);
    out.push_back(head_->sample(x, r));
  }
  return out;
}

Checkpoint Model::checkpoint() const { return Checkpoint::capture(store_, config_.to_json()); }

std::unique_ptr<Model> Model::from_checkpoint(const Checkpoint& ckpt) {
  auto m = std::make_unique<Model>(ModelConfig::from_json(ckpt.metadata), 0);
  ckpt.restore(m->store());
  return m;
}

}  // namespace acd
