#include "acd/heads.hpp"

#include <cmath>
#include <stdexcept>

namespace acd {

HeadKind parse_head_kind(const std::string& s) {
  if (s == "ncp") return HeadKind::ncp;
  if (s == "ncp-attn") return HeadKind::ncp_attn;
  if (s == "ccp") return HeadKind::ccp;
  if (s == "ccp-attn") return HeadKind::ccp_attn;
  if (s == "dac") return HeadKind::dac;
  throw std::invalid_argument("unknown model '" + s + "' (expected ncp, ncp-attn, ccp, ccp-attn or dac)");
}

std::string to_string(HeadKind k) {
  switch (k) {
    case HeadKind::ncp: return "ncp";
    case HeadKind::ncp_attn: return "ncp-attn";
    case HeadKind::ccp: return "ccp";
    case HeadKind::ccp_attn: return "ccp-attn";
    case HeadKind::dac: return "dac";
  }
  return "?";
}

bool is_clusterwise(HeadKind k) { return k != HeadKind::ncp && k != HeadKind::ncp_attn; }

void HeadConfig::validate() const {
  if (input_dim == 0 || hidden == 0 || latent_dim == 0) throw std::invalid_argument("head: dimensions must be positive");
  if (n_importance < 1) throw std::invalid_argument("head: n_importance must be >= 1");
  if (kind != HeadKind::ncp && kind != HeadKind::ccp) {
    if (attn.dim != hidden) throw std::invalid_argument("head: attention dim must equal the hidden width");
    attn.validate();
  }
}

std::unique_ptr<ClusteringHead> make_head(ParameterStore& store, const std::string& name, const HeadConfig& config,
                                          Rng& rng) {
  config.validate();
  switch (config.kind) {
    case HeadKind::ncp:
    case HeadKind::ncp_attn: return std::make_unique<NcpHead>(store, name, config, rng);
    case HeadKind::ccp:
    case HeadKind::ccp_attn: return std::make_unique<CcpHead>(store, name, config, rng);
    case HeadKind::dac: return std::make_unique<DacHead>(store, name, config, rng);
  }
  throw std::logic_error("make_head: bad kind");
}

SplitInputMlp::SplitInputMlp(ParameterStore& store, const std::string& name, std::size_t depth, std::size_t ctx_dim,
                             std::size_t point_dim, std::size_t hidden, std::size_t out, Rng& rng) {
  if (depth < 2) throw std::invalid_argument("split mlp: depth must be >= 2");
  ctx0_ = Linear(store, name + ".0c", ctx_dim, hidden, rng);
  point0_ = Linear(store, name + ".0p", point_dim, hidden, rng, false);
  slope0_ = store.add_parameter(name + ".prelu0", Tensor::scalar(0.25));
  rest_ = Mlp(store, name + ".rest", depth - 1, hidden, hidden, out, rng);
}

Tensor SplitInputMlp::forward(const Tensor& ctx, const Tensor& point_pre) const {
  Tensor h = prelu(add(point_pre, ctx0_.forward(ctx)), slope0_);
  return rest_.forward(h);
}

NcpHead::NcpHead(ParameterStore& store, const std::string& name, const HeadConfig& config, Rng& rng)
    : config_(config) {
  const std::size_t dx = config.input_dim, d = config.hidden;
  if (config.kind == HeadKind::ncp_attn) {
    isab_h_ = Isab(store, name + ".h", dx, config.attn, rng);
    isab_u_ = Isab(store, name + ".u", dx, config.attn, rng);
  } else {
    h_ = Mlp(store, name + ".h", 2, dx, d, d, rng);
    u_ = Mlp(store, name + ".u", 2, dx, d, d, rng);
  }
  g_ = Mlp(store, name + ".g", 5, d, d, d, rng);
  f_ = Mlp(store, name + ".f", 5, 2 * d, d, 1, rng);
}

std::pair<Tensor, Tensor> NcpHead::codes(const Tensor& x) const {
  if (config_.kind == HeadKind::ncp_attn) return {isab_h_.forward(x), isab_u_.forward(x)};
  return {h_.forward(x), u_.forward(x)};
}

NcpHead::Walk NcpHead::walk(const Tensor& hx, const Tensor& ux, std::span<const int> fixed, Rng* rng,
                            bool stop_after_fixed) const {
  const std::size_t n_pts = hx.rows(), d = config_.hidden;
  Walk w;
  // U_n = sum of u over points after n, as one product with a strictly upper triangular ones matrix.
  std::vector<double> tri(n_pts * n_pts, 0.0);
  for (std::size_t r = 0; r < n_pts; ++r)
    for (std::size_t c = r + 1; c < n_pts; ++c) tri[r * n_pts + c] = 1.0;
  Tensor suffix = matmul(Tensor::from(n_pts, n_pts, std::move(tri)), ux);

  std::vector<Tensor> hk, ghk;
  std::vector<Tensor> terms;
  const Tensor zero_row = Tensor::zeros(1, d);
  for (std::size_t n = 0; n < n_pts; ++n) {
    const bool free = n >= fixed.size();
    if (free && stop_after_fixed && n > fixed.size()) break;
    const std::size_t k_now = hk.size();
    Tensor hn = slice_rows(hx, n, n + 1);
    std::vector<Tensor> cand;
    cand.reserve(k_now + 1);
    for (auto const& h : hk) cand.push_back(add(h, hn));
    cand.push_back(hn);
    Tensor g_new = g_.forward(k_now == 0 ? hn : concat_rows(cand));
    Tensor gk = g_new;
    if (k_now > 0) {
      Tensor g_old = concat_rows(ghk);
      Tensor g_sum = sum_rows(g_old);
      Tensor padded = concat_rows({g_old, zero_row});
      gk = add(sub(broadcast_rows(g_sum, k_now + 1), padded), g_new);
    }
    Tensor un = broadcast_rows(slice_rows(suffix, n, n + 1), k_now + 1);
    Tensor lp = log_softmax_rows(transpose(f_.forward(concat_cols({gk, un}))));
    ++w.calls;

    std::size_t choice = 0;
    if (!free) {
      choice = static_cast<std::size_t>(fixed[n] - 1);
      if (choice > k_now) throw std::invalid_argument("ncp: labels are not canonical in visiting order");
    } else {
      auto v = lp.data();
      w.probs.assign(v.size(), 0.0);
      for (std::size_t i = 0; i < v.size(); ++i) w.probs[i] = std::exp(v[i]);
      if (stop_after_fixed) break;
      double r = rng->uniform(), acc = 0.0;
      choice = k_now;
      for (std::size_t i = 0; i <= k_now; ++i) {
        acc += w.probs[i];
        if (r < acc) {
          choice = i;
          break;
        }
      }
    }
    w.labels.push_back(static_cast<int>(choice) + 1);
    terms.push_back(slice_cols(lp, choice, choice + 1));
    if (choice == k_now) {
      hk.push_back(hn);
    } else {
      hk[choice] = add(hk[choice], hn);
    }
    if (ghk.size() < hk.size()) ghk.emplace_back();
    ghk[choice] = slice_rows(g_new, choice, choice + 1);
  }
  w.log_prob = terms.empty() ? Tensor::scalar(0.0) : sum(concat_cols(terms));
  return w;
}

Tensor NcpHead::sequential_log_prob(const Tensor& x, std::span<const int> labels) const {
  if (labels.size() != x.rows()) throw dimension_error("ncp: label count does not match point count");
  auto [hx, ux] = codes(x);
  return walk(hx, ux, labels, nullptr, false).log_prob;
}

std::vector<double> NcpHead::step_distribution(const Tensor& x, std::span<const int> prefix) const {
  if (prefix.size() >= x.rows()) throw std::out_of_range("ncp: step index out of range");
  auto [hx, ux] = codes(x);
  return walk(hx, ux, prefix, nullptr, true).probs;
}

Tensor NcpHead::loss(const Tensor& x, const Labels& labels, Rng& rng) const {
  if (labels.size() != x.rows()) throw dimension_error("ncp: label count does not match point count");
  if (x.rows() <= 1) return Tensor::scalar(0.0);
  auto order = rng.permutation(x.rows());
  auto [hx, ux] = codes(x);
  Labels permuted(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) permuted[i] = labels[order[i]];
  permuted = canonicalize(permuted);
  return neg(walk(gather_rows(hx, order), gather_rows(ux, order), permuted, nullptr, false).log_prob);
}

PosteriorSample NcpHead::sample(const Tensor& x, Rng& rng) const {
  NoGradGuard ng;
  const std::size_t n = x.rows();
  if (n <= 1) return {Labels(n, 1), 0.0, 0};
  auto order = rng.permutation(n);
  auto [hx, ux] = codes(x);
  Walk w = walk(gather_rows(hx, order), gather_rows(ux, order), {}, &rng, false);
  Labels out(n);
  for (std::size_t i = 0; i < n; ++i) out[order[i]] = w.labels[i];
  return {canonicalize(out), w.log_prob.item(), w.calls};
}

double NcpHead::score(const Tensor& x, const Labels& labels, Rng& rng) const {
  NoGradGuard ng;
  if (x.rows() <= 1) return 0.0;
  return -loss(x, labels, rng).item();
}

}  // namespace acd
