#include "acd/heads.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace acd {

namespace {

constexpr double kSigmaFloor = 1e-6;

std::vector<std::size_t> without(std::span<const std::size_t> pool, std::size_t drop) {
  std::vector<std::size_t> out;
  out.reserve(pool.size());
  for (auto i : pool)
    if (i != drop) out.push_back(i);
  return out;
}

// +1 for members, -1 otherwise, so log sigmoid(sign * logit) is the Bernoulli log-likelihood.
Tensor bit_signs(std::span<const int> bits) {
  std::vector<double> s(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) s[i] = bits[i] ? 1.0 : -1.0;
  return Tensor::from(bits.size(), 1, std::move(s));
}

double bernoulli_log_lik(std::span<const double> logits, std::span<const int> bits) {
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    double t = bits[i] ? logits[i] : -logits[i];
    acc += t >= 0 ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t));
  }
  return acc;
}

double log_normal(std::span<const double> z, std::span<const double> mu, std::span<const double> sigma) {
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double r = (z[i] - mu[i]) / sigma[i];
    acc += -0.5 * r * r - std::log(sigma[i]) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return acc;
}

double log_mean_exp(const std::vector<double>& v) {
  double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s / static_cast<double>(v.size()));
}

std::vector<int> membership_bits(std::span<const std::size_t> avail, std::span<const std::size_t> members) {
  std::vector<int> b(avail.size(), 0);
  for (std::size_t i = 0; i < avail.size(); ++i) b[i] = std::binary_search(members.begin(), members.end(), avail[i]);
  return b;
}

void erase_members(std::vector<std::size_t>& remaining, std::span<const std::size_t> members) {
  std::erase_if(remaining, [&](std::size_t i) { return std::binary_search(members.begin(), members.end(), i); });
}

}  // namespace

// ---------------------------------------------------------------- shared encoder

AnchorEncoder::AnchorEncoder(ParameterStore& store, const std::string& name, const HeadConfig& config,
                             bool attention, Rng& rng)
    : attention_(attention) {
  const std::size_t d = config.hidden;
  u_ = Mlp(store, name + ".u", 3, config.input_dim, d, d, rng);
  if (attention) {
    isab_ = Isab(store, name + ".isab", d, config.attn, rng);
    mab_ = Mab(store, name + ".mab", d, d, config.attn, rng);
    pma_ = Pma(store, name + ".pma", d, config.attn, rng);
    anchor_dim_ = d;
  } else {
    anchor_dim_ = config.input_dim;
  }
}

RoundCodes AnchorEncoder::encode(const Tensor& x, const Tensor& ux, std::size_t anchor,
                                 std::span<const std::size_t> avail) const {
  if (avail.empty()) throw std::invalid_argument("clusterwise encode: no available points");
  RoundCodes rc;
  if (!attention_) {
    std::size_t a[] = {anchor};
    rc.d = gather_rows(x, a);
    rc.ua = gather_rows(ux, avail);
    rc.u = mean_rows(rc.ua);
    rc.points = gather_rows(x, avail);
    return rc;
  }
  std::vector<std::size_t> idx;
  idx.reserve(avail.size() + 1);
  idx.push_back(anchor);
  idx.insert(idx.end(), avail.begin(), avail.end());
  Tensor ubar = isab_.forward(gather_rows(ux, idx));
  rc.d = slice_rows(ubar, 0, 1);
  rc.ua = slice_rows(ubar, 1, ubar.rows());
  rc.u = pma_.forward(mab_.forward(rc.ua, rc.d));
  rc.points = rc.ua;
  return rc;
}

// ---------------------------------------------------------------- CCP

CcpHead::CcpHead(ParameterStore& store, const std::string& name, const HeadConfig& config, Rng& rng)
    : config_(config), attention_(config.kind == HeadKind::ccp_attn) {
  const std::size_t d = config.hidden, dz = config.latent_dim;
  enc_ = AnchorEncoder(store, name, config, attention_, rng);
  const std::size_t wd = enc_.anchor_dim();
  h_ = Mlp(store, name + ".h", 3, config.input_dim, d, d, rng);
  g_ = Mlp(store, name + ".g", 3, d, d, d, rng);
  if (attention_) {
    pma_h_ = Pma(store, name + ".pma_h", d, config.attn, rng);
    pma_in_ = Pma(store, name + ".pma_in", d, config.attn, rng);
    pma_out_ = Pma(store, name + ".pma_out", d, config.attn, rng);
  }
  prior_ = Mlp(store, name + ".prior", 5, wd + 2 * d, d, 2 * dz, rng);
  posterior_ = Mlp(store, name + ".posterior", 5, wd + 3 * d, d, 2 * dz, rng);
  rho_ = SplitInputMlp(store, name + ".rho", 4, dz + wd + 2 * d, wd, d, 1, rng);
}

Tensor CcpHead::pool(const Pma& attn, const Tensor& rows) const {
  return attention_ ? attn.forward(rows) : mean_rows(rows);
}

Tensor CcpHead::cluster_code(const Tensor& hx, std::span<const std::size_t> members) const {
  return g_.forward(pool(pma_h_, gather_rows(hx, members)));
}

Tensor CcpHead::assigned_code(const Tensor& hx, const ClusterSets& assigned) const {
  Tensor g = Tensor::zeros(1, config_.hidden);
  for (auto const& s : assigned) g = add(g, cluster_code(hx, s));
  return g;
}

CcpHead::Gaussian CcpHead::gaussian(const Mlp& net, const Tensor& input) const {
  Tensor out = net.forward(input);
  const std::size_t dz = config_.latent_dim;
  return {slice_cols(out, 0, dz), add_scalar(softplus(slice_cols(out, dz, 2 * dz)), kSigmaFloor)};
}

CcpHead::Gaussian CcpHead::prior_of(const RoundCodes& rc, const Tensor& g) const {
  return gaussian(prior_, concat_cols({rc.d, rc.u, g}));
}

CcpHead::Gaussian CcpHead::posterior_of(const RoundCodes& rc, const Tensor& g, std::span<const int> bits) const {
  std::vector<std::size_t> in, out;
  for (std::size_t i = 0; i < bits.size(); ++i) (bits[i] ? in : out).push_back(i);
  const Tensor zero = Tensor::zeros(1, config_.hidden);
  Tensor a_in = in.empty() ? zero : pool(pma_in_, gather_rows(rc.ua, in));
  Tensor a_out = out.empty() ? zero : pool(pma_out_, gather_rows(rc.ua, out));
  return gaussian(posterior_, concat_cols({rc.d, a_in, a_out, g}));
}

Tensor CcpHead::logits(const RoundCodes& rc, const Tensor& g, const Tensor& point_pre, const Tensor& z) const {
  return rho_.forward(concat_cols({z, rc.d, rc.u, g}), point_pre);
}

double CcpHead::importance(const RoundCodes& rc, const Tensor& g, std::span<const int> bits, Rng& rng) const {
  const std::size_t dz = config_.latent_dim;
  Gaussian p = prior_of(rc, g);
  Gaussian q = posterior_of(rc, g, bits);
  Tensor point_pre = rho_.point_part(rc.points);
  std::vector<double> lw(config_.n_importance);
  std::vector<double> z(dz);
  for (auto& w : lw) {
    for (std::size_t j = 0; j < dz; ++j) z[j] = q.mu.data()[j] + q.sigma.data()[j] * rng.normal();
    Tensor logit = logits(rc, g, point_pre, Tensor::from(1, dz, z));
    w = bernoulli_log_lik(logit.data(), bits) + log_normal(z, p.mu.data(), p.sigma.data()) -
        log_normal(z, q.mu.data(), q.sigma.data());
  }
  return log_mean_exp(lw);
}

Tensor CcpHead::loss(const Tensor& x, const Labels& labels, Rng& rng) const {
  if (labels.size() != x.rows()) throw dimension_error("ccp: label count does not match point count");
  const std::size_t n = x.rows(), dz = config_.latent_dim;
  if (n <= 1) return Tensor::scalar(0.0);
  ClusterSets sets = labels_to_sets(labels);
  auto order = rng.permutation(sets.size());
  Tensor hx = h_.forward(x), ux = enc_.point_codes(x);
  std::vector<std::size_t> remaining(n);
  for (std::size_t i = 0; i < n; ++i) remaining[i] = i;
  Tensor g = Tensor::zeros(1, config_.hidden);
  std::vector<Tensor> terms;
  double anchor_terms = 0.0;
  for (std::size_t step = 0; step < order.size(); ++step) {
    auto const& s = sets[order[step]];
    const std::size_t anchor = s[rng.index(s.size())];
    anchor_terms += -std::log(static_cast<double>(remaining.size())) + std::log(static_cast<double>(s.size()));
    auto avail = without(remaining, anchor);
    if (!avail.empty()) {
      RoundCodes rc = enc_.encode(x, ux, anchor, avail);
      auto bits = membership_bits(avail, s);
      Gaussian p = prior_of(rc, g);
      Gaussian q = posterior_of(rc, g, bits);
      std::vector<double> eps(dz);
      for (auto& e : eps) e = rng.normal();
      Tensor z = add(q.mu, mul(q.sigma, Tensor::from(1, dz, eps)));
      Tensor lik = sum(log_sigmoid(mul(logits(rc, g, rho_.point_part(rc.points), z), bit_signs(bits))));
      Tensor ratio = mul(q.sigma, reciprocal(p.sigma));
      Tensor diff = mul(sub(q.mu, p.mu), reciprocal(p.sigma));
      // KL of diagonal Gaussians: sum of (r^2 + delta^2 - 1)/2 - log r.
      Tensor kl = sum(sub(scale(add_scalar(add(square(ratio), square(diff)), -1.0), 0.5), log(ratio)));
      terms.push_back(sub(lik, kl));
    }
    if (step + 1 < order.size()) g = add(g, cluster_code(hx, s));
    erase_members(remaining, s);
  }
  Tensor elbo = terms.empty() ? Tensor::scalar(anchor_terms) : add_scalar(sum(concat_cols(terms)), anchor_terms);
  return neg(elbo);
}

PosteriorSample CcpHead::sample(const Tensor& x, Rng& rng) const {
  NoGradGuard ng;
  const std::size_t n = x.rows(), dz = config_.latent_dim;
  if (n <= 1) return {Labels(n, 1), 0.0, 0};
  Tensor hx = h_.forward(x), ux = enc_.point_codes(x);
  std::vector<std::size_t> remaining(n);
  for (std::size_t i = 0; i < n; ++i) remaining[i] = i;
  Labels out(n, 0);
  Tensor g = Tensor::zeros(1, config_.hidden);
  PosteriorSample ps;
  int next_label = 1;
  while (!remaining.empty()) {
    const std::size_t anchor = remaining[rng.index(remaining.size())];
    ++ps.calls;
    ps.score -= std::log(static_cast<double>(remaining.size()));
    auto avail = without(remaining, anchor);
    std::vector<std::size_t> members{anchor};
    if (!avail.empty()) {
      RoundCodes rc = enc_.encode(x, ux, anchor, avail);
      Gaussian p = prior_of(rc, g);
      std::vector<double> z(dz);
      for (std::size_t j = 0; j < dz; ++j) z[j] = p.mu.data()[j] + p.sigma.data()[j] * rng.normal();
      Tensor logit = logits(rc, g, rho_.point_part(rc.points), Tensor::from(1, dz, z));
      std::vector<int> bits(avail.size());
      for (std::size_t i = 0; i < avail.size(); ++i) {
        bits[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-logit.data()[i]));
        if (bits[i]) members.push_back(avail[i]);
      }
      std::sort(members.begin(), members.end());
      ps.score += std::log(static_cast<double>(members.size())) + importance(rc, g, bits, rng);
    }
    for (auto i : members) out[i] = next_label;
    ++next_label;
    erase_members(remaining, members);
    if (!remaining.empty()) g = add(g, cluster_code(hx, members));
  }
  ps.labels = canonicalize(out);
  return ps;
}

double CcpHead::score(const Tensor& x, const Labels& labels, Rng& rng) const {
  NoGradGuard ng;
  if (labels.size() != x.rows()) throw dimension_error("ccp: label count does not match point count");
  const std::size_t n = x.rows();
  if (n <= 1) return 0.0;
  Tensor hx = h_.forward(x), ux = enc_.point_codes(x);
  ClusterSets sets = labels_to_sets(labels);
  std::vector<std::size_t> remaining(n);
  for (std::size_t i = 0; i < n; ++i) remaining[i] = i;
  Tensor g = Tensor::zeros(1, config_.hidden);
  double total = 0.0;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    auto const& s = sets[k];
    const std::size_t anchor = s.front();
    total += -std::log(static_cast<double>(remaining.size())) + std::log(static_cast<double>(s.size()));
    auto avail = without(remaining, anchor);
    if (!avail.empty()) {
      RoundCodes rc = enc_.encode(x, ux, anchor, avail);
      total += importance(rc, g, membership_bits(avail, s), rng);
    }
    erase_members(remaining, s);
    if (k + 1 < sets.size()) g = add(g, cluster_code(hx, s));
  }
  return total;
}

std::pair<std::vector<double>, std::vector<double>> CcpHead::prior(const Tensor& x, const ClusterSets& assigned,
                                                                   std::size_t anchor,
                                                                   std::span<const std::size_t> avail) const {
  NoGradGuard ng;
  RoundCodes rc = enc_.encode(x, enc_.point_codes(x), anchor, avail);
  Gaussian p = prior_of(rc, assigned_code(h_.forward(x), assigned));
  return {{p.mu.data().begin(), p.mu.data().end()}, {p.sigma.data().begin(), p.sigma.data().end()}};
}

std::vector<double> CcpHead::membership_logits(const Tensor& x, const ClusterSets& assigned, std::size_t anchor,
                                               std::span<const std::size_t> avail,
                                               std::span<const double> z) const {
  NoGradGuard ng;
  if (z.size() != config_.latent_dim) throw dimension_error("ccp: latent width mismatch");
  RoundCodes rc = enc_.encode(x, enc_.point_codes(x), anchor, avail);
  Tensor g = assigned_code(h_.forward(x), assigned);
  Tensor l = logits(rc, g, rho_.point_part(rc.points), Tensor::from(1, z.size(), {z.begin(), z.end()}));
  return {l.data().begin(), l.data().end()};
}

double CcpHead::log_marginal(const Tensor& x, const ClusterSets& assigned, std::size_t anchor,
                             std::span<const std::size_t> avail, std::span<const int> bits, std::size_t n_importance,
                             Rng& rng) const {
  NoGradGuard ng;
  if (n_importance < 1) throw std::invalid_argument("ccp: n_importance must be >= 1");
  if (bits.size() != avail.size()) throw dimension_error("ccp: bit count does not match available points");
  RoundCodes rc = enc_.encode(x, enc_.point_codes(x), anchor, avail);
  Tensor g = assigned_code(h_.forward(x), assigned);
  CcpHead tmp = *this;
  tmp.config_.n_importance = n_importance;
  return tmp.importance(rc, g, bits, rng);
}

double CcpHead::round_kl(const Tensor& x, const ClusterSets& assigned, std::size_t anchor,
                         std::span<const std::size_t> avail, std::span<const int> bits) const {
  NoGradGuard ng;
  RoundCodes rc = enc_.encode(x, enc_.point_codes(x), anchor, avail);
  Tensor g = assigned_code(h_.forward(x), assigned);
  Gaussian p = prior_of(rc, g), q = posterior_of(rc, g, bits);
  double kl = 0.0;
  for (std::size_t j = 0; j < config_.latent_dim; ++j) {
    double r = q.sigma.data()[j] / p.sigma.data()[j];
    double dlt = (q.mu.data()[j] - p.mu.data()[j]) / p.sigma.data()[j];
    kl += 0.5 * (r * r + dlt * dlt - 1.0) - std::log(r);
  }
  return kl;
}

// ---------------------------------------------------------------- DAC

DacHead::DacHead(ParameterStore& store, const std::string& name, const HeadConfig& config, Rng& rng)
    : config_(config) {
  const std::size_t d = config.hidden;
  enc_ = AnchorEncoder(store, name, config, true, rng);
  rho_ = SplitInputMlp(store, name + ".rho", 4, 2 * d, d, d, 1, rng);
}

Tensor DacHead::logits(const Tensor& x, const Tensor& ux, std::size_t anchor,
                       std::span<const std::size_t> avail) const {
  RoundCodes rc = enc_.encode(x, ux, anchor, avail);
  return rho_.forward(concat_cols({rc.d, rc.u}), rho_.point_part(rc.points));
}

Tensor DacHead::loss(const Tensor& x, const Labels& labels, Rng& rng) const {
  if (labels.size() != x.rows()) throw dimension_error("dac: label count does not match point count");
  const std::size_t n = x.rows();
  if (n <= 1) return Tensor::scalar(0.0);
  ClusterSets sets = labels_to_sets(labels);
  auto order = rng.permutation(sets.size());
  Tensor ux = enc_.point_codes(x);
  std::vector<std::size_t> remaining(n);
  for (std::size_t i = 0; i < n; ++i) remaining[i] = i;
  std::vector<Tensor> terms;
  for (auto k : order) {
    auto const& s = sets[k];
    const std::size_t anchor = s[rng.index(s.size())];
    auto avail = without(remaining, anchor);
    if (!avail.empty())
      terms.push_back(sum(log_sigmoid(mul(logits(x, ux, anchor, avail), bit_signs(membership_bits(avail, s))))));
    erase_members(remaining, s);
  }
  return terms.empty() ? Tensor::scalar(0.0) : neg(sum(concat_cols(terms)));
}

PosteriorSample DacHead::sample(const Tensor& x, Rng& rng) const {
  NoGradGuard ng;
  const std::size_t n = x.rows();
  if (n <= 1) return {Labels(n, 1), 0.0, 0};
  Tensor ux = enc_.point_codes(x);
  std::vector<std::size_t> remaining(n);
  for (std::size_t i = 0; i < n; ++i) remaining[i] = i;
  Labels out(n, 0);
  PosteriorSample ps;
  int next_label = 1;
  while (!remaining.empty()) {
    const std::size_t anchor = remaining[rng.index(remaining.size())];
    ++ps.calls;
    ps.score -= std::log(static_cast<double>(remaining.size()));
    auto avail = without(remaining, anchor);
    std::vector<std::size_t> members{anchor};
    if (!avail.empty()) {
      Tensor l = logits(x, ux, anchor, avail);
      std::vector<int> bits(avail.size());
      for (std::size_t i = 0; i < avail.size(); ++i) {
        bits[i] = l.data()[i] > 0.0;
        if (bits[i]) members.push_back(avail[i]);
      }
      std::sort(members.begin(), members.end());
      ps.score += std::log(static_cast<double>(members.size())) + bernoulli_log_lik(l.data(), bits);
    }
    for (auto i : members) out[i] = next_label;
    ++next_label;
    erase_members(remaining, members);
  }
  ps.labels = canonicalize(out);
  return ps;
}

double DacHead::score(const Tensor& x, const Labels& labels, Rng&) const {
  NoGradGuard ng;
  if (labels.size() != x.rows()) throw dimension_error("dac: label count does not match point count");
  const std::size_t n = x.rows();
  if (n <= 1) return 0.0;
  Tensor ux = enc_.point_codes(x);
  std::vector<std::size_t> remaining(n);
  for (std::size_t i = 0; i < n; ++i) remaining[i] = i;
  double total = 0.0;
  for (auto const& s : labels_to_sets(labels)) {
    total += -std::log(static_cast<double>(remaining.size())) + std::log(static_cast<double>(s.size()));
    auto avail = without(remaining, s.front());
    if (!avail.empty()) {
      Tensor l = logits(x, ux, s.front(), avail);
      total += bernoulli_log_lik(l.data(), membership_bits(avail, s));
    }
    erase_members(remaining, s);
  }
  return total;
}

std::vector<double> DacHead::membership_logits(const Tensor& x, std::size_t anchor,
                                               std::span<const std::size_t> avail) const {
  NoGradGuard ng;
  Tensor l = logits(x, enc_.point_codes(x), anchor, avail);
  return {l.data().begin(), l.data().end()};
}

}  // namespace acd
